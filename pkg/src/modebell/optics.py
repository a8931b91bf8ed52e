"""Linear-optical elements lifted to exact Fock-space unitaries.

A passive element is fixed by its single-particle matrix ``W``: column ``i``
lists the output-mode amplitudes of a particle entering mode ``i``, so a
creation operator maps as ``a_i^dag -> sum_j W[j, i] b_j^dag``.  Lifting
expands each basis monomial ``prod_i (a_i^dag)^{n_i} / sqrt(n_i!)`` under that
substitution, which is exact and keeps every total-number block separate.

Beamsplitter convention (system mode ``a``, reference ``x``)::

    c = sqrt(T) a - sqrt(1-T) x
    d = sqrt(1-T) a + sqrt(T) x

At ``T = 0.5`` this is ``c = (a - x)/sqrt(2)``, ``d = (a + x)/sqrt(2)``.
The output modes reuse the input slots: ``c`` in the slot of ``a``,
``d`` in the slot of ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, sqrt

import numpy as np

from .fock import DensityOperator, FockBasis, PureState


@dataclass(frozen=True)
class BeamsplitterSpec:
    mode_in_1: int
    mode_in_2: int
    transmittivity: float = 0.5

    def __post_init__(self):
        if self.mode_in_1 == self.mode_in_2:
            raise ValueError("beamsplitter needs two distinct modes")
        if not 0.0 <= self.transmittivity <= 1.0:
            raise ValueError(f"transmittivity must lie in [0, 1], got {self.transmittivity}")

    def mode_matrix(self) -> np.ndarray:
        """2x2 single-particle matrix on (mode_in_1, mode_in_2)."""
        t = sqrt(self.transmittivity)
        r = sqrt(1.0 - self.transmittivity)
        # rows: output (c, d); columns: input (a, x).  For a real orthogonal
        # map the creation-operator image equals the mode-operator matrix.
        return np.array([[t, -r], [r, t]])


@dataclass(frozen=True)
class PhaseShiftSpec:
    mode: int
    theta: float


def lift_mode_matrix(w: np.ndarray, basis: FockBasis) -> np.ndarray:
    """Fock-space matrix of the passive element with single-particle matrix ``w``."""
    m = basis.n_modes
    w = np.asarray(w, dtype=complex)
    if w.shape != (m, m):
        raise ValueError(f"mode matrix must be {m}x{m}, got {w.shape}")
    u = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, occ in enumerate(basis.states):
        # polynomial in output creation operators, keyed by exponent vector
        poly = {(0,) * m: 1.0 + 0j}
        for mode, n in enumerate(occ):
            for _ in range(n):
                nxt: dict = {}
                for mono, coef in poly.items():
                    for j in range(m):
                        if w[j, mode] == 0:
                            continue
                        key = mono[:j] + (mono[j] + 1,) + mono[j + 1 :]
                        nxt[key] = nxt.get(key, 0j) + coef * w[j, mode]
                poly = nxt
        norm_in = 1.0 / sqrt(np.prod([factorial(n) for n in occ]))
        for mono, coef in poly.items():
            # prod (b^dag)^k |0> = sqrt(prod k!) |k>
            u[basis.index[mono], col] += coef * norm_in * sqrt(np.prod([factorial(k) for k in mono]))
    return u


def embed_mode_matrix(spec: BeamsplitterSpec, n_modes: int) -> np.ndarray:
    i, j = spec.mode_in_1, spec.mode_in_2
    if not (0 <= i < n_modes and 0 <= j < n_modes):
        raise IndexError(f"beamsplitter modes ({i}, {j}) out of range for {n_modes} modes")
    w = np.eye(n_modes)
    w[np.ix_([i, j], [i, j])] = spec.mode_matrix()
    return w


@lru_cache(maxsize=256)
def _beamsplitter_cached(spec: BeamsplitterSpec, n_modes: int, n_max: int) -> np.ndarray:
    from .fock import build_basis

    u = lift_mode_matrix(embed_mode_matrix(spec, n_modes), build_basis(n_modes, n_max))
    u.setflags(write=False)
    return u


def beamsplitter_unitary(spec: BeamsplitterSpec, basis: FockBasis) -> np.ndarray:
    return _beamsplitter_cached(spec, basis.n_modes, basis.n_max)


def phase_unitary(spec: PhaseShiftSpec, basis: FockBasis) -> np.ndarray:
    if not 0 <= spec.mode < basis.n_modes:
        raise IndexError(f"mode {spec.mode} out of range")
    n = basis.occupations()[:, spec.mode]
    return np.diag(np.exp(1j * n * spec.theta))


def apply_phase(state: PureState, spec: PhaseShiftSpec) -> PureState:
    if not 0 <= spec.mode < state.basis.n_modes:
        raise IndexError(f"mode {spec.mode} out of range")
    n = state.basis.occupations()[:, spec.mode]
    return PureState(state.basis, state.amplitudes * np.exp(1j * n * spec.theta))


def apply_unitary(state, u: np.ndarray):
    u = np.asarray(u)
    d = state.basis.dim
    if u.shape != (d, d):
        raise ValueError(f"unitary of shape {u.shape} does not act on dimension {d}")
    if isinstance(state, PureState):
        return PureState(state.basis, u @ state.amplitudes)
    if isinstance(state, DensityOperator):
        return DensityOperator(state.basis, u @ state.matrix @ u.conj().T)
    raise TypeError(f"unsupported state type {type(state).__name__}")
