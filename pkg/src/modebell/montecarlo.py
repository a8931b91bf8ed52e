"""Finite-statistics runs drawn from the exact outcome distribution.

Randomness: each call seeds ``numpy.random.SeedSequence(seed)``.  A CHSH
estimate spawns four children in the setting order (A1,B1), (A1,B2),
(A2,B1), (A2,B2) and feeds each to a PCG64 generator, so any single
setting can be reproduced on its own with ``setting_rng(seed, k)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .protocol import (
    ACCEPTED,
    CHSH_SIGNS,
    ChshSettings,
    Experiment,
    ReferenceSpec,
)

MIN_SHOTS_PER_SETTING = 100
CHUNK = 1 << 20


class AllShotsRejected(RuntimeError):
    """A setting produced no post-selected events."""


@dataclass(frozen=True)
class ShotRecord:
    """One detection event; ``outcome`` is the (c, d, C, D) occupation."""

    outcome: tuple[int, int, int, int]

    @property
    def accepted(self) -> bool:
        c, d, cc, dd = self.outcome
        return c + d == 1 and cc + dd == 1


@dataclass(frozen=True)
class ShotSummary:
    shots: int
    accepted: int
    counts: dict = field(repr=False)  # outcome tuple -> count, nonzero only
    seed: int | None = None

    def acceptance_rate(self) -> float:
        return self.accepted / self.shots

    def accepted_counts(self) -> np.ndarray:
        """Counts of cC, cD, dC, dD."""
        return np.array([self.counts.get(o, 0) for o in ACCEPTED.values()], dtype=np.int64)

    def counts_json(self) -> dict:
        return {"".join(map(str, o)): int(n) for o, n in sorted(self.counts.items())}


def setting_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for setting ``index`` (0..3) of a CHSH estimate."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed).spawn(4)[index]))


def _draw_counts(probs: np.ndarray, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    counts = np.zeros(len(probs), dtype=np.int64)
    left = n_shots
    while left > 0:
        n = min(left, CHUNK)
        counts += kernels.inverse_cdf_counts(cdf, rng.random(n))
        left -= n
    return counts


def _summarize(exp: Experiment, counts: np.ndarray, seed) -> ShotSummary:
    states = exp.basis.states
    nz = {states[i]: int(c) for i, c in enumerate(counts) if c}
    accepted = sum(nz.get(o, 0) for o in ACCEPTED.values())
    return ShotSummary(int(counts.sum()), accepted, nz, seed)


def sample_events(
    prep,
    ref_a: ReferenceSpec | None = None,
    ref_b: ReferenceSpec | None = None,
    transmittivity: float = 0.5,
    n_shots: int = 1000,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> ShotSummary:
    """Draw ``n_shots`` detection events at the references' own phases."""
    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots}")
    exp = Experiment(prep, ref_a, ref_b, transmittivity)
    probs = exp.probabilities(0.0, 0.0)[0]
    rng = rng if rng is not None else np.random.default_rng(seed)
    return _summarize(exp, _draw_counts(probs, n_shots, rng), seed)


def sample_records(prep, ref_a=None, ref_b=None, transmittivity=0.5, n_shots=10, seed=0) -> list[ShotRecord]:
    """Individual events, for inspection of small runs."""
    exp = Experiment(prep, ref_a, ref_b, transmittivity)
    probs = exp.probabilities(0.0, 0.0)[0]
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, np.random.default_rng(seed).random(n_shots), side="right"), len(cdf) - 1)
    return [ShotRecord(exp.basis.states[i]) for i in idx]


@dataclass(frozen=True)
class EstimatorResult:
    settings: ChshSettings
    E_hat: tuple[float, float, float, float]
    E_stderr: tuple[float, float, float, float]
    C_hat: float
    C_stderr: float
    acceptance_rate: float
    shots_total: int
    accepted_total: int
    seed: int
    per_setting: tuple[ShotSummary, ...] = field(repr=False, compare=True)

    def to_dict(self) -> dict:
        return {
            "settings": self.settings.to_dict(),
            "shots": self.shots_total,
            "accepted": self.accepted_total,
            "acceptance_rate": self.acceptance_rate,
            "counts": [s.counts_json() for s in self.per_setting],
            "E_hat": list(self.E_hat),
            "C_hat": self.C_hat,
            "stderr": {"E": list(self.E_stderr), "C": self.C_stderr},
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def estimate_correlator(counts: np.ndarray) -> tuple[float, float]:
    """``(E_hat, stderr)`` from accepted counts (cC, cD, dC, dD).

    stderr = sqrt((1 - E^2) / n) for n accepted events.
    """
    n = int(counts.sum())
    if n == 0:
        raise AllShotsRejected("no accepted events")
    e = float(counts @ np.array([1, -1, -1, 1])) / n
    return e, math.sqrt(max(1.0 - e * e, 0.0) / n)


def estimate_chsh(
    prep,
    settings: ChshSettings,
    ref_a: ReferenceSpec | None = None,
    ref_b: ReferenceSpec | None = None,
    transmittivity: float = 0.5,
    shots_per_setting: int = 100_000,
    seed: int = 0,
) -> EstimatorResult:
    if shots_per_setting < MIN_SHOTS_PER_SETTING:
        raise ValueError(f"shots_per_setting must be >= {MIN_SHOTS_PER_SETTING}, got {shots_per_setting}")
    exp = Experiment(prep, ref_a, ref_b, transmittivity)
    ta, tb = np.array(settings.pairs()).T
    all_probs = exp.probabilities(ta, tb)
    children = np.random.SeedSequence(seed).spawn(4)

    summaries, es, ses = [], [], []
    for k in range(4):
        rng = np.random.Generator(np.random.PCG64(children[k]))
        counts = _draw_counts(all_probs[k], shots_per_setting, rng)
        summary = _summarize(exp, counts, seed)
        try:
            e, se = estimate_correlator(summary.accepted_counts())
        except AllShotsRejected:
            raise AllShotsRejected(f"setting pair {k} produced no accepted events") from None
        summaries.append(summary)
        es.append(e)
        ses.append(se)

    c_hat = float(abs(np.dot(CHSH_SIGNS, es)))
    c_se = math.sqrt(sum(s * s for s in ses))
    shots = sum(s.shots for s in summaries)
    accepted = sum(s.accepted for s in summaries)
    return EstimatorResult(
        settings,
        tuple(es),
        tuple(ses),
        c_hat,
        c_se,
        accepted / shots,
        shots,
        accepted,
        seed,
        tuple(summaries),
    )
