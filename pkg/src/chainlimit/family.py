"""Indexed families of chains: boundedness, cutoff evidence, spectral tails.

Every flag computed here is a trend over the finitely many indices
actually evaluated, not an asymptotic statement.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chain import ReversibleChain, normalize_chain, validate_rate_matrix
from .errors import DenseCostWarning, NotNormalized, UnknownFamily

DEFAULT_INDICES = (1, 2, 5, 10, 20, 50)
HYPERCUBE_INDICES = tuple(range(4, 13))
DEFAULT_TIMES = tuple(float(t) for t in np.geomspace(0.05, 5.0, 25))
HYPERCUBE_MAX_DIM = 14
HYPERCUBE_WARN_DIM = 12


@dataclass(eq=False)
class ChainFamily:
    """``build(n)`` gives the n-th member; members are cached once built."""

    name: str
    build: Callable[[int], ReversibleChain]
    indices: tuple[int, ...] = DEFAULT_INDICES
    params: dict = field(default_factory=dict)
    _members: dict = field(default_factory=dict, repr=False)

    def member(self, n: int) -> ReversibleChain:
        if n not in self._members:
            self._members[n] = self.build(n)
        return self._members[n]

    def normalized(self) -> "ChainFamily":
        """The family with every member rescaled in time so that G(1) = 2."""
        return ChainFamily(
            f"{self.name}[normalized]",
            lambda n: normalize_chain(self.member(n)).chain,
            self.indices,
            {**self.params, "normalized": True},
        )


def _chain(q, labels) -> ReversibleChain:
    return ReversibleChain(validate_rate_matrix(q, labels=labels))


def two_point(n: int) -> ReversibleChain:
    r = 1.0 / n
    return _chain([[-r, r], [r, -r]], ["w0", "w1"])


def four_point(n: int) -> ReversibleChain:
    """States 00, 01, 10, 11: rate n between i0 and i1, rate 1 between 0i and 1i."""
    labels = ["00", "01", "10", "11"]
    q = np.zeros((4, 4))
    for i in range(2):
        a, b = labels.index(f"{i}0"), labels.index(f"{i}1")
        q[a, b] = q[b, a] = n
        a, b = labels.index(f"0{i}"), labels.index(f"1{i}")
        q[a, b] = q[b, a] = 1.0
    np.fill_diagonal(q, -q.sum(axis=1))
    return _chain(q, labels)


def two_blocks(n: int, intra_rate: float = 1.0, cross_power: float = 2.0) -> ReversibleChain:
    """Two complete-graph blocks of n states; cross rates n**-cross_power."""
    m = 2 * n
    block = np.arange(m) // n
    same = block[:, None] == block[None, :]
    q = np.where(same, intra_rate, float(n) ** -cross_power)
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    labels = [f"b{block[x]}.{x % n}" for x in range(m)]
    return _chain(q, labels)


def hypercube(d: int) -> ReversibleChain:
    """Walk on {0,1}^d flipping each coordinate at a common rate, normalized so G(1) = 2."""
    if d > HYPERCUBE_MAX_DIM:
        raise ValueError(f"hypercube dimension capped at {HYPERCUBE_MAX_DIM}")
    if d > HYPERCUBE_WARN_DIM:
        warnings.warn(f"dense {2**d}-state eigensolve", DenseCostWarning, stacklevel=2)
    if d < 2:
        raise ValueError("hypercube needs d >= 2 to be normalizable")
    size = 2**d
    states = np.arange(size)
    q = np.zeros((size, size))
    for bit in range(d):
        q[states, states ^ (1 << bit)] = 1.0
    np.fill_diagonal(q, -float(d))
    labels = [format(x, f"0{d}b") for x in states]
    return normalize_chain(_chain(q, labels)).chain


def hypercube_rate(d: int) -> float:
    """Per-coordinate flip rate r with (1 + exp(-2r))**d = 2."""
    return -0.5 * np.log(2.0 ** (1.0 / d) - 1.0)


BUILTIN = {
    "two_point": (two_point, DEFAULT_INDICES),
    "four_point": (four_point, DEFAULT_INDICES),
    "two_blocks": (two_blocks, (2, 5, 10, 20, 50)),
    "hypercube": (hypercube, HYPERCUBE_INDICES),
}


def builtin_family(name: str, **params) -> ChainFamily:
    if name not in BUILTIN:
        raise UnknownFamily(f"unknown family {name!r}; choose from {', '.join(BUILTIN)}")
    build, indices = BUILTIN[name]
    fam = ChainFamily(name, (lambda n: build(n, **params)) if params else build, indices, dict(params))
    return fam


@dataclass(frozen=True, eq=False)
class MixingTable:
    indices: tuple[int, ...]
    times: tuple[float, ...]
    values: np.ndarray  # (len(indices), len(times))

    def rows(self):
        for a, n in enumerate(self.indices):
            for b, t in enumerate(self.times):
                yield (n, t, float(self.values[a, b]))


def mixing_table(family: ChainFamily, n_list: Sequence[int] | None = None, t_grid: Sequence[float] = DEFAULT_TIMES) -> MixingTable:
    """G_(n)(t) for each member, as spectral sums of exp(t w_i)."""
    n_list = tuple(family.indices if n_list is None else n_list)
    t_grid = tuple(float(t) for t in t_grid)
    values = np.array([[family.member(n).mixing(t) for t in t_grid] for n in n_list])
    return MixingTable(n_list, t_grid, values)


@dataclass(frozen=True, eq=False)
class BoundednessReport:
    table: MixingTable
    supremum: np.ndarray  # per t over computed n; also the bound candidate B_t
    growing: np.ndarray  # per t
    anomalous: bool
    cutoff: bool
    growth_threshold: float

    @property
    def times(self):
        return self.table.times

    @property
    def bound(self) -> np.ndarray:
        return self.supremum

    @property
    def bounded_looking(self) -> bool:
        return not bool(np.any(self.growing))

    def flags(self) -> dict[str, bool]:
        return {
            "bounded-looking": self.bounded_looking,
            "growing": bool(np.any(self.growing)),
            "anomalous": self.anomalous,
            "cutoff": self.cutoff,
        }

    def text(self) -> str:
        lines = [f"# heuristic flags over n = {list(self.table.indices)} (finite-n evidence only)"]
        lines += [f"{k}: {v}" for k, v in self.flags().items()]
        for t, b, g in zip(self.times, self.supremum, self.growing):
            lines.append(f"t={t:.6g} sup_G={b:.12g} growing={bool(g)}")
        return "\n".join(lines)


def _increasing(v) -> bool:
    return bool(np.all(np.diff(v) > 0))


def boundedness_report(
    family: ChainFamily,
    n_list: Sequence[int] | None = None,
    t_grid: Sequence[float] = DEFAULT_TIMES,
    growth_threshold: float = 1.0,
    anomaly_ratio: float = 0.5,
) -> BoundednessReport:
    """Per-t suprema of G_(n)(t) plus trend flags.

    growing(t): G_(n)(t) strictly increases along the top half of
    ``n_list`` and by more than ``growth_threshold`` in total.
    anomalous: at every grid t, |G_(n)(t) - 2| never increases along
    ``n_list`` and ends at most ``anomaly_ratio`` times where it started.
    cutoff: growing at some t < 1 while G_(n)(t) - 1 strictly decreases
    at some t > 1.
    """
    table = mixing_table(family, n_list, t_grid)
    v = table.values
    top = v[len(table.indices) // 2 :]
    growing = np.array([_increasing(col) and col[-1] - col[0] > growth_threshold for col in top.T])
    gap = np.abs(v - 2.0)
    anomalous = bool(
        len(table.indices) > 1
        and np.all(np.diff(gap, axis=0) <= 1e-12)
        and np.all(gap[-1] <= anomaly_ratio * gap[0])
    )
    times = np.array(table.times)
    mixes = [_increasing(-(v[:, b] - 1)) for b in range(len(times))]
    cutoff = bool(np.any(growing & (times < 1)) and np.any(np.array(mixes) & (times > 1)))
    return BoundednessReport(table, v.max(axis=0), growing, anomalous, cutoff, growth_threshold)


@dataclass(frozen=True)
class CutoffEvidence:
    cutoff: bool
    indices: tuple[int, ...]
    early: tuple[float, ...]  # G_(n)(t_lo)
    late_excess: tuple[float, ...]  # G_(n)(t_hi) - 1
    t_lo: float
    t_hi: float

    def rows(self):
        return list(zip(self.indices, self.early, self.late_excess))


def cutoff_detector(
    family: ChainFamily,
    n_list: Sequence[int] | None = None,
    t_lo: float = 0.5,
    t_hi: float = 2.0,
    threshold_grow: float = 1.0,
    threshold_mix: float = 0.1,
    normalization_tol: float = 1e-8,
) -> CutoffEvidence:
    """Finite-n evidence of L^2 cutoff around t = 1.

    True when G_(n)(t_lo) strictly increases in n by more than
    ``threshold_grow`` and G_(n)(t_hi) - 1 strictly decreases to below
    ``threshold_mix``.  Members must be normalized.
    """
    if not t_lo < 1 < t_hi:
        raise ValueError("need t_lo < 1 < t_hi")
    n_list = tuple(family.indices if n_list is None else n_list)
    for n in n_list:
        g1 = family.member(n).mixing(1.0)
        if abs(g1 - 2) > normalization_tol:
            raise NotNormalized(f"member {n} of {family.name} has G(1) = {g1:.12g}")
    early = np.array([family.member(n).mixing(t_lo) for n in n_list])
    late = np.array([family.member(n).mixing(t_hi) - 1 for n in n_list])
    grows = _increasing(early) and early[-1] - early[0] > threshold_grow
    mixes = _increasing(-late) and late[-1] < threshold_mix
    return CutoffEvidence(bool(grows and mixes), n_list, tuple(map(float, early)), tuple(map(float, late)), t_lo, t_hi)


def tail_profile(family: ChainFamily, n_list: Sequence[int] | None, k: int, t: float) -> list[tuple[int, int, float, float]]:
    """Rows (n, k, t, sum_{i>k} lambda_(n),i ** t)."""
    n_list = tuple(family.indices if n_list is None else n_list)
    rows = []
    for n in n_list:
        w = family.member(n).generator_eigenvalues
        rows.append((n, k, float(t), float(np.exp(t * w[k + 1 :]).sum())))
    return rows
