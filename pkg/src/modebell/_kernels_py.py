"""NumPy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the compiled versions are tested against.
"""

import numpy as np


def outcome_probabilities(coef, weights, theta_a, theta_b):
    """Outcome probabilities of a phase-polynomial state family.

    ``coef[b, o, k, l]`` is the amplitude on outcome ``o`` of branch ``b``
    contributed by ``k`` particles in reference A and ``l`` in reference B.
    Each reference phase enters as ``exp(1j * k * theta)``, so for every
    angle pair ``n``::

        P[n, o] = sum_b weights[b] * |sum_kl coef[b,o,k,l] e^{i(k ta_n + l tb_n)}|^2
    """
    coef = np.asarray(coef, dtype=complex)
    theta_a = np.atleast_1d(np.asarray(theta_a, dtype=float))
    theta_b = np.atleast_1d(np.asarray(theta_b, dtype=float))
    ka, kb = coef.shape[2], coef.shape[3]
    pa = np.exp(1j * np.outer(theta_a, np.arange(ka)))
    pb = np.exp(1j * np.outer(theta_b, np.arange(kb)))
    amp = np.einsum("bokl,nk,nl->nbo", coef, pa, pb, optimize=True)
    return np.einsum("b,nbo->no", np.asarray(weights, dtype=float), amp.real**2 + amp.imag**2)


def inverse_cdf_counts(cdf, uniforms):
    """Histogram of ``searchsorted(cdf, u, 'right')`` clipped to the last bin."""
    cdf = np.asarray(cdf, dtype=float)
    idx = np.searchsorted(cdf, np.asarray(uniforms, dtype=float), side="right")
    np.minimum(idx, len(cdf) - 1, out=idx)
    return np.bincount(idx, minlength=len(cdf)).astype(np.int64)
