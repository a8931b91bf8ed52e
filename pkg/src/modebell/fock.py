"""Truncated Fock space for a handful of bosonic modes.

States live in the span of all occupation vectors with total particle
number ``<= n_max``.  Basis order is graded: ascending total number, then
ascending lexicographic order inside each sector.  That order is part of
the serialized form, so don't change it.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

ATOL = 1e-12
ZERO_AMPLITUDE = 1e-14

Occupation = tuple[int, ...]


class TruncationError(ValueError):
    """Raised when an operation would populate states beyond ``n_max``."""


def _sector(n_modes: int, total: int) -> list[Occupation]:
    out = []
    for bars in itertools.combinations(range(total + n_modes - 1), n_modes - 1):
        edges = (-1,) + bars + (total + n_modes - 1,)
        out.append(tuple(edges[i + 1] - edges[i] - 1 for i in range(n_modes)))
    return sorted(out)


@dataclass(frozen=True, eq=False)
class FockBasis:
    n_modes: int
    n_max: int
    states: tuple[Occupation, ...] = field(repr=False)
    index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def occupation(self, i: int) -> Occupation:
        return self.states[i]

    def totals(self) -> np.ndarray:
        return np.array([sum(s) for s in self.states])

    def occupations(self) -> np.ndarray:
        """``(dim, n_modes)`` integer array of occupation numbers."""
        return np.array(self.states, dtype=np.int64).reshape(self.dim, self.n_modes)

    def __eq__(self, other):
        if not isinstance(other, FockBasis):
            return NotImplemented
        return self.n_modes == other.n_modes and self.n_max == other.n_max

    def __hash__(self):
        return hash((self.n_modes, self.n_max))


@lru_cache(maxsize=None)
def build_basis(n_modes: int, n_max: int) -> FockBasis:
    if n_modes < 1:
        raise ValueError(f"need at least one mode, got n_modes={n_modes}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    states = []
    for total in range(n_max + 1):
        states.extend(_sector(n_modes, total))
    index = {s: i for i, s in enumerate(states)}
    return FockBasis(n_modes, n_max, tuple(states), index)


def basis_dimension(n_modes: int, n_max: int) -> int:
    """Stars-and-bars count of occupation vectors with total <= n_max."""
    return sum(comb(n + n_modes - 1, n_modes - 1) for n in range(n_max + 1))


@dataclass(frozen=True)
class PureState:
    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_dict(cls, basis: FockBasis, components: dict) -> PureState:
        amps = np.zeros(basis.dim, dtype=complex)
        for occ, amp in components.items():
            occ = tuple(occ)
            if occ not in basis.index:
                raise TruncationError(f"occupation {occ} is not in the basis")
            amps[basis.index[occ]] += amp
        return cls(basis, amps)

    @classmethod
    def vacuum(cls, basis: FockBasis) -> PureState:
        return cls.from_dict(basis, {(0,) * basis.n_modes: 1.0})

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> PureState:
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.basis, self.amplitudes / n)

    def to_density(self) -> DensityOperator:
        return DensityOperator(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))

    def components(self) -> dict[Occupation, complex]:
        """Nonzero components keyed by occupation."""
        return {
            self.basis.states[i]: complex(a)
            for i, a in enumerate(self.amplitudes)
            if abs(a) > ZERO_AMPLITUDE
        }

    def to_json(self) -> str:
        return json.dumps(
            {
                "M": self.basis.n_modes,
                "N_max": self.basis.n_max,
                "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> PureState:
        data = json.loads(text)
        basis = build_basis(data["M"], data["N_max"])
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
        return cls(basis, amps)


@dataclass(frozen=True)
class DensityOperator:
    basis: FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.basis.dim
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence[PureState]) -> DensityOperator:
        basis = states[0].basis
        m = np.zeros((basis.dim, basis.dim), dtype=complex)
        for w, s in zip(weights, states):
            m += w * np.outer(s.amplitudes, s.amplitudes.conj())
        return cls(basis, m)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_valid(self, atol: float = ATOL, psd_tol: float = 1e-10) -> bool:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
            return False
        if abs(self.trace() - 1.0) > atol:
            return False
        return np.linalg.eigvalsh(m).min() >= -psd_tol

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def to_json(self) -> str:
        return json.dumps(
            {
                "M": self.basis.n_modes,
                "N_max": self.basis.n_max,
                "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
            }
        )


def apply_creation(state: PureState, mode: int) -> PureState:
    basis = state.basis
    _check_mode(basis, mode)
    out = np.zeros(basis.dim, dtype=complex)
    for i, amp in enumerate(state.amplitudes):
        if amp == 0:
            continue
        occ = basis.states[i]
        if sum(occ) == basis.n_max:
            if abs(amp) > ZERO_AMPLITUDE:
                raise TruncationError(
                    f"creation on mode {mode} pushes {occ} past n_max={basis.n_max}"
                )
            continue
        raised = occ[:mode] + (occ[mode] + 1,) + occ[mode + 1 :]
        out[basis.index[raised]] += np.sqrt(occ[mode] + 1) * amp
    return PureState(basis, out)


def apply_annihilation(state: PureState, mode: int) -> PureState:
    basis = state.basis
    _check_mode(basis, mode)
    out = np.zeros(basis.dim, dtype=complex)
    for i, amp in enumerate(state.amplitudes):
        occ = basis.states[i]
        if amp == 0 or occ[mode] == 0:
            continue
        lowered = occ[:mode] + (occ[mode] - 1,) + occ[mode + 1 :]
        out[basis.index[lowered]] += np.sqrt(occ[mode]) * amp
    return PureState(basis, out)


def number_operator(basis: FockBasis, mode: int) -> np.ndarray:
    _check_mode(basis, mode)
    return np.diag([float(s[mode]) for s in basis.states])


def _check_mode(basis: FockBasis, mode: int):
    if not 0 <= mode < basis.n_modes:
        raise IndexError(f"mode {mode} out of range for {basis.n_modes} modes")


def _product_embedding(b1: FockBasis, b2: FockBasis, cap: int):
    """Index pairs (i1, i2) -> combined index, for pairs within ``cap``."""
    combined = build_basis(b1.n_modes + b2.n_modes, cap)
    rows = []
    for i1, o1 in enumerate(b1.states):
        for i2, o2 in enumerate(b2.states):
            j = combined.index.get(o1 + o2)
            if j is not None:
                rows.append((i1, i2, j))
    return combined, np.array(rows, dtype=np.int64).reshape(-1, 3)


def tensor_product(s1, s2, cap: int | None = None):
    """Kronecker product with mode order ``s1`` modes then ``s2`` modes.

    The combined basis is truncated at ``cap`` (default: sum of the two
    ``n_max`` values, which loses nothing).  Dropping a nonzero component
    past the cap raises :class:`TruncationError`.
    """
    if type(s1) is not type(s2):
        raise TypeError("tensor_product needs two states of the same kind")
    b1, b2 = s1.basis, s2.basis
    if cap is None:
        cap = b1.n_max + b2.n_max
    combined, emb = _product_embedding(b1, b2, cap)
    if isinstance(s1, PureState):
        prod = np.outer(s1.amplitudes, s2.amplitudes)
        kept = np.zeros_like(prod, dtype=bool)
        kept[emb[:, 0], emb[:, 1]] = True
        if np.abs(prod[~kept]).max(initial=0.0) > ZERO_AMPLITUDE:
            raise TruncationError(f"product state has weight above cap={cap}")
        out = np.zeros(combined.dim, dtype=complex)
        out[emb[:, 2]] = prod[emb[:, 0], emb[:, 1]]
        return PureState(combined, out)
    if isinstance(s1, DensityOperator):
        d1, d2 = b1.dim, b2.dim
        full = np.kron(s1.matrix, s2.matrix)
        flat = emb[:, 0] * d2 + emb[:, 1]
        kept = np.zeros(d1 * d2, dtype=bool)
        kept[flat] = True
        if np.abs(full.diagonal()[~kept]).max(initial=0.0) > ZERO_AMPLITUDE:
            raise TruncationError(f"product state has weight above cap={cap}")
        out = np.zeros((combined.dim, combined.dim), dtype=complex)
        out[np.ix_(emb[:, 2], emb[:, 2])] = full[np.ix_(flat, flat)]
        return DensityOperator(combined, out)
    raise TypeError(f"unsupported state type {type(s1).__name__}")


def partial_trace(rho: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    basis = rho.basis
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one mode")
    if len(set(keep)) != len(keep) or any(not 0 <= k < basis.n_modes for k in keep):
        raise ValueError(f"invalid mode subset {keep}")
    traced = [m for m in range(basis.n_modes) if m not in keep]
    reduced = build_basis(len(keep), basis.n_max)

    # group basis states by the occupation of the traced-out modes
    groups: dict[Occupation, list[tuple[int, int]]] = {}
    for i, occ in enumerate(basis.states):
        env = tuple(occ[m] for m in traced)
        sub = tuple(occ[m] for m in keep)
        groups.setdefault(env, []).append((i, reduced.index[sub]))

    out = np.zeros((reduced.dim, reduced.dim), dtype=complex)
    m = rho.matrix
    for members in groups.values():
        full_idx = np.array([i for i, _ in members])
        red_idx = np.array([j for _, j in members])
        out[np.ix_(red_idx, red_idx)] += m[np.ix_(full_idx, full_idx)]
    return DensityOperator(reduced, out)


def permute_modes(state, order: Sequence[int]):
    """Reorder modes so that new mode ``k`` is old mode ``order[k]``."""
    basis = state.basis
    if sorted(order) != list(range(basis.n_modes)):
        raise ValueError(f"{order} is not a permutation of {basis.n_modes} modes")
    perm = np.array(
        [basis.index[tuple(occ[order.index(m)] for m in range(basis.n_modes))] for occ in basis.states]
    )
    # perm[i]: old index of the state whose new occupation is basis.states[i]
    if isinstance(state, PureState):
        return PureState(basis, state.amplitudes[perm])
    return DensityOperator(basis, state.matrix[np.ix_(perm, perm)])
