"""Closed-form correlators, the mixed-state CHSH surface and the Horodecki bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .protocol import (
    ChshSettings,
    Experiment,
    MixedPrep,
    ReferenceSpec,
    SystemPrep,
    maximize_chsh,
)

SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
# occupation qubit: sigma_z = |0><0| - |1><1|
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def e_analytic(alpha, beta, theta_a, theta_b):
    """``2|alpha| sqrt(1-|alpha|^2) cos(gamma + theta_a - theta_b)``, gamma = arg(alpha beta*).

    Valid for balanced references and a 50:50 beamsplitter.  Broadcasts over
    array-valued angles.
    """
    gamma = np.angle(alpha * np.conj(beta))
    a = np.abs(alpha)
    return 2.0 * a * np.sqrt(np.clip(1.0 - a**2, 0.0, None)) * np.cos(gamma + np.asarray(theta_a) - np.asarray(theta_b))


def optimal_settings(gamma: float = 0.0, theta_a1: float = 0.0) -> ChshSettings:
    theta_b1 = gamma + theta_a1 + math.pi / 4
    return ChshSettings(theta_a1, theta_a1 + math.pi / 2, theta_b1, theta_b1 - math.pi / 2)


def mixed_family(p: float, gamma1: float = 0.0) -> MixedPrep:
    """Balanced-moduli mixture; orthogonality forces ``gamma2 = gamma1 + pi``."""
    return MixedPrep(
        p,
        SystemPrep.from_alpha_sq(0.5, gamma1),
        SystemPrep.from_alpha_sq(0.5, gamma1 + math.pi),
    )


def mixed_correlator(prep: MixedPrep, theta_a, theta_b):
    """Branch-weighted closed-form correlator.

    Averaging conditional correlators is only legitimate because, with
    balanced references at T = 0.5, every branch has the same
    post-selection probability.
    """
    return prep.p * e_analytic(prep.psi1.alpha, prep.psi1.beta, theta_a, theta_b) + (1 - prep.p) * e_analytic(
        prep.psi2.alpha, prep.psi2.beta, theta_a, theta_b
    )


def surface_settings(d: float, gamma1: float = 0.0, theta_a1: float = 0.0) -> ChshSettings:
    """Settings with the pure-state optimal offsets and ``d = gamma1 + thetaA1 - thetaB1``."""
    theta_b1 = gamma1 + theta_a1 - d
    return ChshSettings(theta_a1, theta_a1 + math.pi / 2, theta_b1, theta_b1 - math.pi / 2)


@dataclass(frozen=True)
class SurfacePoint:
    p: float
    d: float
    C: float


def c_mixed(p: float, d, gamma1: float = 0.0):
    """CHSH value of the mixed family at phase offset ``d`` (array-friendly)."""
    prep = mixed_family(p, gamma1)
    d = np.asarray(d, dtype=float)
    theta_b1 = gamma1 - d
    es = [
        mixed_correlator(prep, 0.0, theta_b1),
        mixed_correlator(prep, 0.0, theta_b1 - math.pi / 2),
        mixed_correlator(prep, math.pi / 2, theta_b1),
        mixed_correlator(prep, math.pi / 2, theta_b1 - math.pi / 2),
    ]
    return np.abs(es[0] + es[1] + es[2] - es[3])


def c_mixed_surface(p_grid: Iterable[float], d_grid: Iterable[float], gamma1: float = 0.0) -> list[SurfacePoint]:
    """Surface rows ordered by p, then d."""
    d_arr = np.asarray(list(d_grid), dtype=float)
    out = []
    for p in p_grid:
        cs = c_mixed(float(p), d_arr, gamma1)
        out.extend(SurfacePoint(float(p), float(d), float(c)) for d, c in zip(d_arr, cs))
    return out


def max_over_d(p: float, d_points: int = 360, gamma1: float = 0.0) -> tuple[float, float]:
    """``(max_d C, argmax d)`` by grid search plus bounded refinement."""
    grid = np.linspace(0.0, 2 * math.pi, d_points, endpoint=False)
    cs = c_mixed(p, grid, gamma1)
    i = int(np.argmax(cs))
    step = 2 * math.pi / d_points
    res = minimize_scalar(
        lambda d: -float(c_mixed(p, d, gamma1)),
        bounds=(grid[i] - step, grid[i] + step),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if -res.fun >= cs[i]:
        return float(-res.fun), float(res.x)
    return float(cs[i]), float(grid[i])


def violation_boundary(tol: float = 1e-12, d_points: int = 360) -> float:
    """Smallest p at which the mixed family stops violating (root of max_d C = 2 on [0, 1/2])."""
    return float(bisect(lambda p: max_over_d(p, d_points)[0] - 2.0, 0.0, 0.5, xtol=tol))


def boundary_analytic() -> float:
    return (1.0 - 1.0 / SQRT2) / 2.0


@dataclass(frozen=True)
class TwoQubitState:
    """Density matrix on the occupation qubits, basis |00>, |01>, |10>, |11> (A first)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=1e-10, rtol=0):
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-10:
            raise ValueError("matrix does not have unit trace")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_prep(cls, prep) -> TwoQubitState:
        if isinstance(prep, SystemPrep):
            branches = [(1.0, prep)]
        elif isinstance(prep, MixedPrep):
            branches = [(prep.p, prep.psi1), (1 - prep.p, prep.psi2)]
        else:
            raise TypeError(f"cannot map {type(prep).__name__} to two qubits")
        m = np.zeros((4, 4), dtype=complex)
        for w, s in branches:
            v = np.array([0, s.alpha, s.beta, 0], dtype=complex)
            m += w * np.outer(v, v.conj())
        return cls(m)


def correlation_matrix(rho: TwoQubitState | np.ndarray) -> np.ndarray:
    m = rho.matrix if isinstance(rho, TwoQubitState) else TwoQubitState(rho).matrix
    return np.array([[np.trace(m @ np.kron(si, sj)).real for sj in PAULIS] for si in PAULIS])


def horodecki_max_chsh(rho: TwoQubitState | np.ndarray) -> float:
    """Maximal CHSH value over all spin-type settings: 2 sqrt(u1 + u2)."""
    t = correlation_matrix(rho)
    u = np.sort(np.linalg.eigvalsh(t.T @ t))[::-1]
    return float(2.0 * math.sqrt(max(u[0] + u[1], 0.0)))


@dataclass(frozen=True)
class BiasedPoint:
    qsq: float
    C: float
    settings: ChshSettings
    select: float

    def to_dict(self) -> dict:
        return {"qsq": self.qsq, "C": self.C, "settings": self.settings.to_dict(), "select": self.select}


def biased_reference_scan(
    qsq_grid: Iterable[float],
    qsq_b: float = 0.5,
    alpha_sq: float = 0.5,
    gamma: float = 0.0,
    grid_points: int = 72,
) -> list[BiasedPoint]:
    """Best CHSH value when Alice's reference has weight ``|q|^2`` on vacuum.

    Bob's reference stays at ``qsq_b``.  The bias must differ between the
    parties to matter: with identical references the factor ``q r`` is
    common to both post-selected branches and cancels on conditioning.
    """
    prep = SystemPrep.from_alpha_sq(alpha_sq, gamma)
    ref_b = ReferenceSpec.from_qsq(qsq_b)
    grid = np.linspace(0.0, 2 * math.pi, grid_points, endpoint=False)
    out = []
    for qsq in qsq_grid:
        exp = Experiment(prep, ReferenceSpec.from_qsq(float(qsq)), ref_b)
        res = maximize_chsh(exp, grid)
        _, p_sel = exp.correlators(0.0, 0.0)
        out.append(BiasedPoint(float(qsq), res.value, res.settings, float(p_sel[0])))
    return out


def effective_amplitudes(prep: SystemPrep, ref_a: ReferenceSpec, ref_b: ReferenceSpec) -> tuple[complex, complex]:
    """Normalized post-selected branch amplitudes for unequal references.

    Alice's click comes from her reference on the ``|01>`` branch and from
    the system on ``|10>``, so the branches pick up ``r_A q_B`` and
    ``q_A r_B`` respectively.
    """
    a = prep.alpha * ref_a.r * ref_b.q
    b = prep.beta * ref_a.q * ref_b.r
    n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    return a / n, b / n


def biased_chsh_closed_form(qsq_a: float, qsq_b: float = 0.5, alpha_sq: float = 0.5) -> float:
    """Optimal CHSH value ``2 sqrt(2) * 2|a'||b'|`` for biased references."""
    a, b = effective_amplitudes(
        SystemPrep.from_alpha_sq(alpha_sq), ReferenceSpec.from_qsq(qsq_a), ReferenceSpec.from_qsq(qsq_b)
    )
    return TSIRELSON * 2 * abs(a) * abs(b)


__all__ = [
    "BiasedPoint",
    "SurfacePoint",
    "TSIRELSON",
    "TwoQubitState",
    "biased_chsh_closed_form",
    "biased_reference_scan",
    "boundary_analytic",
    "c_mixed",
    "c_mixed_surface",
    "correlation_matrix",
    "e_analytic",
    "effective_amplitudes",
    "horodecki_max_chsh",
    "max_over_d",
    "mixed_correlator",
    "mixed_family",
    "optimal_settings",
    "surface_settings",
    "violation_boundary",
]
