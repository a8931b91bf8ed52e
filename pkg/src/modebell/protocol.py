"""The two-party experiment on a single boson shared between regions A and B.

Mode order throughout is ``(a, x_A, b, x_B)``: Alice's system mode, her
reference, Bob's system mode, his reference.  After the two local
beamsplitters the same slots hold the detector modes ``(c, d, C, D)``.

A trial is kept when Alice's pair ``(c, d)`` holds exactly one particle and
Bob's pair ``(C, D)`` holds exactly one particle.  Coincidence tables are
conditional on that event, so ``cC + cD + dC + dD = 1`` and the correlator is
``E = cC + dD - cD - dC``.

Two evaluation routes exist and are tested against each other:

* :func:`run_experiment` builds the full input state with tensor products,
  applies the reference phase shifters and the Fock-space beamsplitter
  unitaries, and enumerates every outcome.
* :class:`Experiment` precomputes how each outcome amplitude depends on the
  reference phases and evaluates batches of angle pairs through the compiled
  kernel.  All scans and optimizations go through this one.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .fock import FockBasis, PureState, build_basis, permute_modes, tensor_product
from .optics import BeamsplitterSpec, PhaseShiftSpec, apply_phase, beamsplitter_unitary

NORM_TOL = 1e-12
SELECT_FLOOR = 1e-14
TWO_PI = 2.0 * math.pi

MODE_ORDER = ("a", "x_A", "b", "x_B")
OUTPUT_LABELS = ("c", "d", "C", "D")
# (c, d, C, D) occupations of the four accepted detector patterns
ACCEPTED = {
    "cC": (1, 0, 1, 0),
    "cD": (1, 0, 0, 1),
    "dC": (0, 1, 1, 0),
    "dD": (0, 1, 0, 1),
}
SIGNS = np.array([1.0, -1.0, -1.0, 1.0])  # cC, cD, dC, dD


class PostSelectionError(RuntimeError):
    """No trial can pass post-selection for the requested configuration."""


@dataclass(frozen=True)
class SystemPrep:
    """``alpha |01> + beta |10>`` on the system modes (A occupation first)."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1")

    @classmethod
    def from_alpha_sq(cls, alpha_sq: float, gamma: float = 0.0) -> SystemPrep:
        """alpha = sqrt(alpha_sq), beta = sqrt(1 - alpha_sq) e^{-i gamma}."""
        if not 0.0 <= alpha_sq <= 1.0:
            raise ValueError(f"alpha_sq must lie in [0, 1], got {alpha_sq}")
        return cls(
            complex(math.sqrt(alpha_sq)),
            math.sqrt(1.0 - alpha_sq) * cmath.exp(-1j * gamma),
        )

    @property
    def gamma(self) -> float:
        """Phase of ``alpha * conj(beta)``."""
        return cmath.phase(self.alpha * self.beta.conjugate())

    @property
    def max_particles(self) -> int:
        return 1

    def components(self) -> dict[tuple[int, int], complex]:
        return {(0, 1): complex(self.alpha), (1, 0): complex(self.beta)}

    def branches(self):
        return [(1.0, self.components())]

    def overlap(self, other: SystemPrep) -> complex:
        return self.alpha.conjugate() * other.alpha + self.beta.conjugate() * other.beta


@dataclass(frozen=True)
class MixedPrep:
    """``p |psi1><psi1| + (1 - p) |psi2><psi2|`` with orthogonal branches."""

    p: float
    psi1: SystemPrep
    psi2: SystemPrep

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"mixing probability must lie in [0, 1], got {self.p}")
        if abs(self.psi1.overlap(self.psi2)) > NORM_TOL:
            raise ValueError("mixture branches must be orthogonal")

    @property
    def max_particles(self) -> int:
        return 1

    def branches(self):
        return [(self.p, self.psi1.components()), (1.0 - self.p, self.psi2.components())]


@dataclass(frozen=True)
class NumberMixture:
    """Separable ``sum_n w_n |n, N-n><n, N-n|`` with ``N`` bosons in total."""

    total: int
    weights: tuple[float, ...]

    def __post_init__(self):
        if self.total < 0:
            raise ValueError("total particle number must be >= 0")
        w = tuple(float(x) for x in self.weights)
        if len(w) != self.total + 1:
            raise ValueError(f"need {self.total + 1} weights for N={self.total}, got {len(w)}")
        if min(w) < 0 or abs(sum(w) - 1.0) > NORM_TOL:
            raise ValueError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", w)

    @property
    def max_particles(self) -> int:
        return self.total

    def branches(self):
        return [(w, {(n, self.total - n): 1.0}) for n, w in enumerate(self.weights)]


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference state ``q|0> + r e^{i theta}|1>`` fed into one beamsplitter port."""

    q: complex = 1 / math.sqrt(2)
    r: complex = 1 / math.sqrt(2)
    theta: float = 0.0

    def __post_init__(self):
        norm = abs(self.q) ** 2 + abs(self.r) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"|q|^2 + |r|^2 = {norm!r}, expected 1")

    @classmethod
    def balanced(cls, theta: float = 0.0) -> ReferenceSpec:
        return cls(theta=theta)

    @classmethod
    def from_qsq(cls, qsq: float, theta: float = 0.0) -> ReferenceSpec:
        if not 0.0 <= qsq <= 1.0:
            raise ValueError(f"|q|^2 must lie in [0, 1], got {qsq}")
        return cls(complex(math.sqrt(qsq)), complex(math.sqrt(1.0 - qsq)), theta)

    def with_theta(self, theta: float) -> ReferenceSpec:
        return ReferenceSpec(self.q, self.r, theta)

    def state(self) -> PureState:
        """The unphased two-level state; ``theta`` is applied as a phase shift."""
        return PureState(build_basis(1, 1), [self.q, self.r])


@dataclass(frozen=True)
class CoincidenceTable:
    cC: float
    cD: float
    dC: float
    dD: float
    select: float

    def as_array(self) -> np.ndarray:
        return np.array([self.cC, self.cD, self.dC, self.dD])

    def to_json(self) -> str:
        return json.dumps(
            {"cC": self.cC, "cD": self.cD, "dC": self.dC, "dD": self.dD, "select": self.select}
        )

    @classmethod
    def from_json(cls, text: str) -> CoincidenceTable:
        d = json.loads(text)
        return cls(d["cC"], d["cD"], d["dC"], d["dD"], d["select"])


@dataclass(frozen=True)
class ChshSettings:
    thetaA1: float
    thetaA2: float
    thetaB1: float
    thetaB2: float

    def pairs(self) -> list[tuple[float, float]]:
        """Angle pairs in the order (A1,B1), (A1,B2), (A2,B1), (A2,B2)."""
        return [
            (self.thetaA1, self.thetaB1),
            (self.thetaA1, self.thetaB2),
            (self.thetaA2, self.thetaB1),
            (self.thetaA2, self.thetaB2),
        ]

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.thetaA1, self.thetaA2, self.thetaB1, self.thetaB2)

    def to_dict(self) -> dict:
        return dict(zip(("thetaA1", "thetaA2", "thetaB1", "thetaB2"), self.as_tuple()))


CHSH_SIGNS = np.array([1.0, 1.0, 1.0, -1.0])


@dataclass(frozen=True)
class ChshResult:
    settings: ChshSettings
    correlators: tuple[float, float, float, float]
    value: float
    method: str = "exact"

    def to_dict(self) -> dict:
        return {
            "settings": self.settings.to_dict(),
            "E": list(self.correlators),
            "C": self.value,
            "method": self.method,
        }


def chsh_value(correlators: Sequence[float]) -> float:
    e11, e12, e21, e22 = correlators
    return float(abs(e11 + e12 + e21 - e22))


def correlation(table: CoincidenceTable) -> float:
    return table.cC + table.dD - table.dC - table.cD


# -- exact Fock-space route ---------------------------------------------------


def _system_state(components: dict, n_max: int) -> PureState:
    return PureState.from_dict(build_basis(2, n_max), components)


def input_state(components: dict, n_max: int, ref_a: ReferenceSpec, ref_b: ReferenceSpec) -> PureState:
    """System branch ⊗ references, in mode order (a, x_A, b, x_B), phases applied."""
    sys = _system_state(components, n_max)
    refs = tensor_product(ref_a.state(), ref_b.state())
    full = tensor_product(sys, refs)  # (a, b, x_A, x_B)
    full = permute_modes(full, [0, 2, 1, 3])
    full = apply_phase(full, PhaseShiftSpec(1, ref_a.theta))
    return apply_phase(full, PhaseShiftSpec(3, ref_b.theta))


def detection_unitary(basis: FockBasis, transmittivity: float) -> np.ndarray:
    """Both local beamsplitters on the four-mode space."""
    u_a = beamsplitter_unitary(BeamsplitterSpec(0, 1, transmittivity), basis)
    u_b = beamsplitter_unitary(BeamsplitterSpec(2, 3, transmittivity), basis)
    return u_b @ u_a


@dataclass(frozen=True)
class OutcomeDistribution:
    """Unconditional probabilities over detector occupations (c, d, C, D)."""

    basis: FockBasis
    probs: np.ndarray = field(repr=False)

    def accepted_mask(self) -> np.ndarray:
        occ = self.basis.occupations()
        return (occ[:, 0] + occ[:, 1] == 1) & (occ[:, 2] + occ[:, 3] == 1)

    def select(self) -> float:
        return float(self.probs[self.accepted_mask()].sum())

    def table(self) -> CoincidenceTable:
        p_sel = self.select()
        if p_sel < SELECT_FLOOR:
            raise PostSelectionError(f"post-selection probability {p_sel:.3g} is zero")
        vals = [self.probs[self.basis.index[occ]] / p_sel for occ in ACCEPTED.values()]
        return CoincidenceTable(*(float(v) for v in vals), select=p_sel)

    def outcomes(self) -> list[tuple[tuple[int, ...], float]]:
        """Outcomes with nonzero probability, in basis order."""
        return [
            (self.basis.states[i], float(p))
            for i, p in enumerate(self.probs)
            if p > SELECT_FLOOR**2
        ]


def outcome_distribution(prep, ref_a: ReferenceSpec, ref_b: ReferenceSpec, transmittivity: float = 0.5):
    if not 0.0 <= transmittivity <= 1.0:
        raise ValueError(f"transmittivity must lie in [0, 1], got {transmittivity}")
    n_max = prep.max_particles + 2
    basis = build_basis(4, n_max)
    u = detection_unitary(basis, transmittivity)
    probs = np.zeros(basis.dim)
    # mix unconditional distributions, condition once afterwards
    for weight, comps in prep.branches():
        if weight == 0:
            continue
        out = u @ input_state(comps, prep.max_particles, ref_a, ref_b).amplitudes
        probs += weight * (out.real**2 + out.imag**2)
    return OutcomeDistribution(basis, probs)


def run_experiment(prep, ref_a: ReferenceSpec, ref_b: ReferenceSpec, transmittivity: float = 0.5) -> CoincidenceTable:
    return outcome_distribution(prep, ref_a, ref_b, transmittivity).table()


def chsh_result(prep, settings: ChshSettings, ref_a=None, ref_b=None, transmittivity: float = 0.5) -> ChshResult:
    ref_a = ref_a or ReferenceSpec()
    ref_b = ref_b or ReferenceSpec()
    es = []
    for ta, tb in settings.pairs():
        table = run_experiment(
            prep, ref_a.with_theta(ref_a.theta + ta), ref_b.with_theta(ref_b.theta + tb), transmittivity
        )
        es.append(correlation(table))
    return ChshResult(settings, tuple(es), chsh_value(es))


def chsh(prep, settings: ChshSettings, ref_a=None, ref_b=None, transmittivity: float = 0.5) -> float:
    return chsh_result(prep, settings, ref_a, ref_b, transmittivity).value


# -- batched route --------------------------------------------------------------


class Experiment:
    """Phase-resolved model of one configuration, evaluated through the kernels.

    Every output amplitude is a polynomial in ``e^{i theta_A}`` and
    ``e^{i theta_B}`` whose degree is the reference occupation, so the
    coefficients are computed once with the exact unitary and the setting
    angles are swept cheaply.  Setting angles add to each reference's own
    ``theta``.
    """

    def __init__(self, prep, ref_a=None, ref_b=None, transmittivity: float = 0.5):
        if not 0.0 <= transmittivity <= 1.0:
            raise ValueError(f"transmittivity must lie in [0, 1], got {transmittivity}")
        self.prep = prep
        self.ref_a = ref_a or ReferenceSpec()
        self.ref_b = ref_b or ReferenceSpec()
        self.transmittivity = transmittivity
        self.basis = build_basis(4, prep.max_particles + 2)
        u = detection_unitary(self.basis, transmittivity)

        branches = [(w, c) for w, c in prep.branches() if w > 0]
        self.weights = np.array([w for w, _ in branches])
        ca = (self.ref_a.q, self.ref_a.r * cmath.exp(1j * self.ref_a.theta))
        cb = (self.ref_b.q, self.ref_b.r * cmath.exp(1j * self.ref_b.theta))
        coef = np.zeros((len(branches), self.basis.dim, 2, 2), dtype=complex)
        for bi, (_, comps) in enumerate(branches):
            for (na, nb), amp in comps.items():
                for k, l in itertools.product(range(2), range(2)):
                    col = self.basis.index[(na, k, nb, l)]
                    coef[bi, :, k, l] += u[:, col] * amp * ca[k] * cb[l]
        self.coef = np.ascontiguousarray(coef)
        self._accepted_rows = np.array([self.basis.index[o] for o in ACCEPTED.values()])
        self._coef_accepted = np.ascontiguousarray(coef[:, self._accepted_rows])

    def _evaluate(self, coef, theta_a, theta_b) -> np.ndarray:
        ta, tb = np.broadcast_arrays(np.asarray(theta_a, dtype=float), np.asarray(theta_b, dtype=float))
        flat = kernels.outcome_probabilities(
            coef, self.weights, np.ascontiguousarray(ta.ravel()), np.ascontiguousarray(tb.ravel())
        )
        return flat.reshape(ta.shape + (coef.shape[1],)) if ta.ndim else flat

    def probabilities(self, theta_a, theta_b) -> np.ndarray:
        """Unconditional outcome probabilities, shape ``broadcast(theta_a, theta_b) + (dim,)``.

        Scalar angles give shape ``(1, dim)``.
        """
        return self._evaluate(self.coef, theta_a, theta_b)

    def accepted_probabilities(self, theta_a, theta_b) -> np.ndarray:
        """Unconditional probabilities of cC, cD, dC, dD, trailing axis of length 4."""
        return self._evaluate(self._coef_accepted, theta_a, theta_b)

    def correlators(self, theta_a, theta_b) -> tuple[np.ndarray, np.ndarray]:
        """Conditional correlators and post-selection probabilities.

        ``E`` is NaN wherever post-selection is impossible.
        """
        acc = self.accepted_probabilities(theta_a, theta_b)
        p_sel = acc.sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            e = np.where(p_sel >= SELECT_FLOOR, acc @ SIGNS / p_sel, np.nan)
        return e, p_sel

    def table(self, theta_a: float, theta_b: float) -> CoincidenceTable:
        acc = self.accepted_probabilities(theta_a, theta_b)[0]
        p_sel = float(acc.sum())
        if p_sel < SELECT_FLOOR:
            raise PostSelectionError(f"post-selection probability {p_sel:.3g} is zero")
        return CoincidenceTable(*(float(v) for v in acc / p_sel), select=p_sel)

    def chsh(self, settings: ChshSettings) -> ChshResult:
        ta, tb = np.array(settings.pairs()).T
        e, p_sel = self.correlators(ta, tb)
        if np.any(p_sel < SELECT_FLOOR):
            raise PostSelectionError("post-selection impossible for at least one setting pair")
        return ChshResult(settings, tuple(float(x) for x in e), chsh_value(e))

    def _chsh_vec(self, angles: np.ndarray) -> float:
        return self.chsh(ChshSettings(*angles)).value


def angle_grid(points: int = 72) -> np.ndarray:
    if points < 2:
        raise ValueError("angle grid needs at least two points")
    return np.linspace(0.0, TWO_PI, points, endpoint=False)


def maximize_chsh(
    experiment: Experiment,
    grid: Iterable[float] | None = None,
    refine: bool = True,
    xtol: float = 1e-8,
    n_candidates: int = 4,
) -> ChshResult:
    """Maximize the CHSH value over the four setting angles.

    The grid stage is exhaustive over ``grid**4`` but costs ``O(G^3)``: for
    fixed Alice angles the objective is ``|f(B1) + g(B2)|`` with
    ``f = E[A1,:] + E[A2,:]`` and ``g = E[A1,:] - E[A2,:]``, which is
    maximized by taking extremes of ``f`` and ``g`` independently.  The best
    few grid points are then polished by cyclic coordinate search.
    """
    g = angle_grid() if grid is None else np.asarray(list(grid), dtype=float)
    n = len(g)
    ia, ib = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    e_flat, p_flat = experiment.correlators(g[ia.ravel()], g[ib.ravel()])
    if np.any(p_flat < SELECT_FLOOR):
        raise PostSelectionError("post-selection impossible on part of the angle grid")
    e = e_flat.reshape(n, n)

    f = e[:, None, :] + e[None, :, :]  # [A1, A2, B]
    h = e[:, None, :] - e[None, :, :]
    pos = f.max(axis=2) + h.max(axis=2)
    neg = -(f.min(axis=2) + h.min(axis=2))
    best = np.maximum(pos, neg)
    order = np.argsort(best.ravel())[::-1][: max(1, n_candidates)]

    candidates = []
    for flat in order:
        a1, a2 = divmod(int(flat), n)
        if pos[a1, a2] >= neg[a1, a2]:
            b1, b2 = int(np.argmax(f[a1, a2])), int(np.argmax(h[a1, a2]))
        else:
            b1, b2 = int(np.argmin(f[a1, a2])), int(np.argmin(h[a1, a2]))
        candidates.append(np.array([g[a1], g[a2], g[b1], g[b2]]))

    step = TWO_PI / n
    results = []
    for x in candidates:
        if refine:
            x = _coordinate_refine(experiment, x, step, xtol)
        results.append(experiment.chsh(ChshSettings(*(float(v) for v in x))))
    return max(results, key=lambda r: r.value)


def _coordinate_refine(experiment: Experiment, x: np.ndarray, step: float, xtol: float, max_sweeps: int = 50):
    x = x.copy()
    current = experiment._chsh_vec(x)
    for _ in range(max_sweeps):
        moved = 0.0
        for i in range(4):
            def neg_c(t, i=i):
                y = x.copy()
                y[i] = t
                return -experiment._chsh_vec(y)

            res = minimize_scalar(
                neg_c, bounds=(x[i] - step, x[i] + step), method="bounded", options={"xatol": xtol / 10}
            )
            if -res.fun > current:
                moved = max(moved, abs(res.x - x[i]))
                x[i] = res.x
                current = -res.fun
        if moved < xtol:
            break
    return x


@dataclass(frozen=True)
class SeparableScanResult:
    total: int
    max_chsh: float
    weights: tuple[float, ...]
    settings: ChshSettings | None
    points: int
    skipped: int

    def to_dict(self) -> dict:
        return {
            "N": self.total,
            "max_C": self.max_chsh,
            "argmax_weights": list(self.weights),
            "settings": self.settings.to_dict() if self.settings else None,
            "weight_points": self.points,
            "skipped_unselectable": self.skipped,
        }


def simplex_grid(n_parts: int, resolution: int) -> list[tuple[float, ...]]:
    """All weight vectors of length ``n_parts`` with entries in multiples of 1/resolution."""
    out = []
    for combo in itertools.product(range(resolution + 1), repeat=n_parts - 1):
        rest = resolution - sum(combo)
        if rest >= 0:
            out.append(tuple(c / resolution for c in combo) + (rest / resolution,))
    return out


def separable_scan(
    total: int,
    weight_grid: Iterable[Sequence[float]] | None = None,
    angle_grid_points: Iterable[float] | None = None,
    ref_a: ReferenceSpec | None = None,
    ref_b: ReferenceSpec | None = None,
    transmittivity: float = 0.5,
    refine: bool = True,
) -> SeparableScanResult:
    """Largest CHSH value reachable by number-diagonal separable states.

    Weight vectors with no post-selectable trials (for example all weight
    on ``|N, 0>`` with ``N = 2``) carry no correlator and are skipped.
    """
    if total not in (1, 2):
        raise ValueError(f"separable scan supports N in {{1, 2}}, got {total}")
    weights = list(weight_grid) if weight_grid is not None else simplex_grid(total + 1, 10)
    if not weights:
        raise ValueError("weight grid is empty")
    best, best_w, best_s, skipped = -math.inf, None, None, 0
    for w in weights:
        exp = Experiment(NumberMixture(total, tuple(w)), ref_a, ref_b, transmittivity)
        _, p_sel = exp.correlators(0.0, 0.0)
        if p_sel[0] < SELECT_FLOOR:
            skipped += 1
            continue
        res = maximize_chsh(exp, angle_grid_points, refine=refine)
        if res.value > best:
            best, best_w, best_s = res.value, tuple(w), res.settings
    if best_w is None:
        raise PostSelectionError("no weight vector on the grid admits post-selection")
    return SeparableScanResult(total, float(best), best_w, best_s, len(weights), skipped)
