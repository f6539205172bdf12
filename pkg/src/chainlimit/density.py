"""Density arrays X_ij(t) = p_t(w_i, w_j) over i.i.d. pi-samples.

Anything with a ``pi`` vector and a ``kernel(t)`` method can stand in for
a chain here (:class:`~chainlimit.chain.ReversibleChain`,
:class:`TabulatedKernel`).  Expectations of monomials in the array are
computed exactly as pi-weighted sums over the state space; Monte Carlo
sampling is only used for the empirical distance and for sample arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import AxiomViolation, TooManyIndices

MAX_INDICES = 6
RNG_ALGORITHM = "philox4x64-10(key=seed,counter=(0,0,stream,replicate))/u53"


class TabulatedKernel:
    """A kernel source given by a function of time, not necessarily a chain."""

    def __init__(self, pi, kernel_fn: Callable[[float], np.ndarray]):
        self.pi = np.asarray(pi, dtype=float)
        self._fn = kernel_fn

    @property
    def n(self) -> int:
        return len(self.pi)

    def kernel(self, t: float) -> np.ndarray:
        return np.asarray(self._fn(float(t)), dtype=float)


def perturbed(source, i: int, j: int, delta: float) -> TabulatedKernel:
    """Add ``delta`` to entries (i, j) and (j, i) of the kernel at every time."""

    def fn(t):
        k = np.array(source.kernel(t), dtype=float)
        k[i, j] += delta
        if i != j:
            k[j, i] += delta
        return k

    return TabulatedKernel(source.pi, fn)


@dataclass(frozen=True)
class Monomial:
    """Product of array entries X_ij(t)**power, as sorted (i, j, t, power) factors."""

    factors: tuple[tuple[int, int, float, int], ...] = ()

    @classmethod
    def of(cls, *terms) -> "Monomial":
        powers: dict[tuple[int, int, float], int] = {}
        for term in terms:
            i, j, t, *rest = term
            p = int(rest[0]) if rest else 1
            if i < 0 or j < 0 or p < 1 or t < 0:
                raise ValueError(f"bad monomial factor {term!r}")
            key = (int(i), int(j), float(t))
            powers[key] = powers.get(key, 0) + p
        return cls(tuple(sorted((i, j, t, p) for (i, j, t), p in powers.items())))

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial.of(*self.factors, *other.factors)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted({x for i, j, _, _ in self.factors for x in (i, j)}))

    @property
    def degree(self) -> int:
        return sum(p for *_, p in self.factors)

    def relabel(self, mapping) -> "Monomial":
        return Monomial.of(*((mapping[i], mapping[j], t, p) for i, j, t, p in self.factors))

    def __str__(self):
        if not self.factors:
            return "1"
        parts = []
        for i, j, t, p in self.factors:
            s = f"X{i}{j}({t:g})"
            parts.append(s if p == 1 else f"{s}^{p}")
        return "*".join(parts)


def X(i: int, j: int, t: float, power: int = 1) -> Monomial:
    return Monomial.of((i, j, t, power))


def exact_moment(chain, m: Monomial, max_indices: int = MAX_INDICES) -> float:
    """E(m) for the density array of ``chain``: a pi-weighted sum over states.

    Each distinct array index becomes one summation variable, so the cost
    is at most n**d for d distinct indices; einsum picks the contraction
    order.
    """
    idx = m.indices
    if len(idx) > max_indices:
        raise TooManyIndices(f"{len(idx)} distinct indices (limit {max_indices})")
    if not m.factors:
        return 1.0
    letter = {x: chr(ord("a") + k) for k, x in enumerate(idx)}
    subs, ops = [], []
    for x in idx:
        subs.append(letter[x])
        ops.append(chain.pi)
    for i, j, t, p in m.factors:
        k = chain.kernel(t)
        if i == j:
            subs.append(letter[i])
            ops.append(np.diagonal(k) ** p)
        else:
            subs.append(letter[i] + letter[j])
            ops.append(k**p)
    return float(np.einsum(",".join(subs) + "->", *ops, optimize="greedy"))


def expectation(chain, poly: Sequence[tuple[float, Monomial]]) -> float:
    """E of a polynomial given as (coefficient, monomial) pairs."""
    return sum(c * exact_moment(chain, m) for c, m in poly)


@dataclass(frozen=True)
class MomentCheck:
    key: str
    value: float
    target: float | None
    passed: bool | None  # None: informational


@dataclass
class MomentReport:
    checks: list[MomentCheck]
    times: tuple[float, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.key for c in self.checks if c.passed is False]

    def __getitem__(self, key: str) -> MomentCheck:
        for c in self.checks:
            if c.key == key:
                return c
        raise KeyError(key)

    def rows(self):
        for c in self.checks:
            status = "INFO" if c.passed is None else ("PASS" if c.passed else "FAIL")
            yield (c.key, c.value, "" if c.target is None else c.target, status)

    def text(self) -> str:
        lines = []
        for key, value, target, status in self.rows():
            tgt = "-" if target == "" else f"{target:.12g}"
            lines.append(f"{key:<40} {value: .12g}  target {tgt:<16} {status}")
        return "\n".join(lines)


def _ck(s, t, diagonal=False):
    b = 0 if diagonal else 1
    return [
        (1.0, X(0, b, s + t, 2)),
        (-2.0, X(0, b, s + t) * X(0, 2, s) * X(2, b, t)),
        (1.0, X(0, 2, s) * X(0, 3, s) * X(2, b, t) * X(3, b, t)),
    ]


def axiom_report(chain, times: Sequence[float] = (0.5, 1.0), tol: float = 1e-8, strict: bool = True) -> MomentReport:
    """Evaluate every density-array axiom functional exactly.

    Stochasticity, symmetry, both Chapman-Kolmogorov forms (every ordered
    pair of grid times) and normality are checked against their targets;
    boundedness is checked against G(t) when the source knows its own
    mixing, and continuity is reported for adjacent grid times.  With
    ``strict`` a failing functional raises :class:`AxiomViolation`.
    """
    times = tuple(float(t) for t in times)
    checks: list[MomentCheck] = []

    def add(key, value, target):
        passed = None if target is None else abs(value - target) <= tol
        checks.append(MomentCheck(key, float(value), target, passed))

    for t in times:
        add(f"stochasticity[t={t:g}]", expectation(chain, [(2.0, X(0, 1, t)), (-1.0, X(0, 1, t) * X(0, 2, t))]), 1.0)
    for t in times:
        add(
            f"symmetry[t={t:g}]",
            expectation(chain, [(1.0, X(1, 0, t, 2)), (-2.0, X(1, 0, t) * X(0, 1, t)), (1.0, X(0, 1, t, 2))]),
            0.0,
        )
    for s in times:
        for t in times:
            add(f"chapman_kolmogorov[s={s:g},t={t:g}]", expectation(chain, _ck(s, t)), 0.0)
    for s in times:
        for t in times:
            add(f"diagonal_ck[s={s:g},t={t:g}]", expectation(chain, _ck(s, t, diagonal=True)), 0.0)
    add("normality", exact_moment(chain, X(0, 0, 1.0)), 2.0)
    mixing = getattr(chain, "mixing", None)
    for t in times:
        add(f"boundedness[t={t:g}]", exact_moment(chain, X(0, 0, t)), None if mixing is None else mixing(t))
    grid = sorted(set(times))
    for a, b in zip(grid, grid[1:]):
        val = expectation(chain, [(1.0, X(0, 1, a, 2)), (-2.0, X(0, 1, a) * X(0, 1, b)), (1.0, X(0, 1, b, 2))])
        add(f"continuity[s={a:g},t={b:g}]", val, None)

    report = MomentReport(checks, times, tol)
    if strict and not report.passed:
        raise AxiomViolation(report.failed, report)
    return report


def replicate_uniforms(seed: int, replicate: int, size: int, stream: int = 0) -> np.ndarray:
    """``size`` uniforms in [0, 1) from the Philox block keyed by ``seed``.

    Each (stream, replicate) pair starts at its own counter, high words
    first, so streams never overlap and any replicate can be regenerated
    on its own.
    """
    bg = np.random.Philox(key=int(seed), counter=[0, 0, int(stream), int(replicate)])
    return (bg.random_raw(size) >> np.uint64(11)) * (1.0 / 2**53)


def draw_states(pi, size: int, seed: int, replicate: int = 0, stream: int = 0) -> np.ndarray:
    """``size`` i.i.d. draws from ``pi`` (with replacement) on one stream."""
    cdf = np.cumsum(pi)
    u = replicate_uniforms(seed, replicate, size, stream) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


@dataclass(frozen=True, eq=False)
class ArraySample:
    k: int
    times: tuple[float, ...]
    seed: int
    replicates: int
    states: np.ndarray  # (replicates, k)
    values: np.ndarray  # (replicates, k, k, len(times))
    algorithm: str = RNG_ALGORITHM
    stream: int = 0

    def monomial_values(self, m: Monomial, clip: float | None = None) -> np.ndarray:
        """Per-replicate value of ``m``; entries clipped to [0, clip] if given."""
        out = np.ones(self.replicates)
        tindex = {t: a for a, t in enumerate(self.times)}
        for i, j, t, p in m.factors:
            v = self.values[:, i, j, tindex[float(t)]]
            if clip is not None:
                v = np.clip(v, 0.0, clip)
            out = out * v**p
        return out


def sample_array(chain, k: int, times: Sequence[float], seed: int = 0, replicates: int = 1, stream: int = 0) -> ArraySample:
    """Draw ``replicates`` independent k x k density arrays.

    Replicate r draws its k states from its own stream (seed, stream, r),
    so results do not depend on how replicates are batched.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    times = tuple(float(t) for t in times)
    pi = np.asarray(chain.pi)
    states = np.empty((replicates, k), dtype=np.int64)
    for r in range(replicates):
        states[r] = draw_states(pi, k, seed, r, stream)
    values = np.empty((replicates, k, k, len(times)))
    for a, t in enumerate(times):
        kern = chain.kernel(t)
        values[..., a] = kern[states[:, :, None], states[:, None, :]]
    states.setflags(write=False)
    values.setflags(write=False)
    return ArraySample(k, times, int(seed), int(replicates), states, values, RNG_ALGORITHM, int(stream))


def moment_dictionary(k: int, times: Sequence[float], degree: int) -> list[Monomial]:
    """All monomials of total degree 1..degree in {X_ij(t): i <= j < k, t in times}."""
    variables = [(i, j, float(t)) for t in times for i in range(k) for j in range(i, k)]
    out = []
    for r in range(1, degree + 1):
        for combo in combinations_with_replacement(variables, r):
            out.append(Monomial.of(*combo))
    return out


class MomentDistance(NamedTuple):
    distance: float
    monomial: Monomial | None
    value_a: float
    value_b: float


def array_distance_details(a, b, k: int, times: Sequence[float], degree: int) -> MomentDistance:
    if k > MAX_INDICES:
        raise TooManyIndices(f"k = {k} exceeds {MAX_INDICES}")
    best = MomentDistance(0.0, None, 0.0, 0.0)
    for m in moment_dictionary(k, times, degree):
        ea, eb = exact_moment(a, m), exact_moment(b, m)
        if abs(ea - eb) > best.distance:
            best = MomentDistance(abs(ea - eb), m, ea, eb)
    return best


def array_distance(a, b, k: int, times: Sequence[float], degree: int) -> float:
    """Max |E_a(m) - E_b(m)| over the moment dictionary (exact on both sides)."""
    return array_distance_details(a, b, k, times, degree).distance


class EmpiricalDistance(NamedTuple):
    estimate: float
    stderr: float
    monomial: Monomial
    clip: float


def empirical_distance(
    a, b, k: int, times: Sequence[float], seed: int = 0, replicates: int = 10_000, degree: int = 1
) -> EmpiricalDistance:
    """Monte Carlo version of :func:`array_distance` on clipped monomials.

    Array entries are clipped to [0, K] with K = 10 * (largest diagonal
    kernel value of either source), which makes every test function
    bounded and Lipschitz.  ``a`` uses stream 0 and ``b`` stream 1.
    Returns the largest |mean difference| and its standard error.
    """
    times = tuple(float(t) for t in times)
    clip = 10.0 * max(float(np.max(np.diagonal(src.kernel(t)))) for src in (a, b) for t in times)
    sa = sample_array(a, k, times, seed, replicates, stream=0)
    sb = sample_array(b, k, times, seed, replicates, stream=1)
    best = None
    for m in moment_dictionary(k, times, degree):
        fa, fb = sa.monomial_values(m, clip), sb.monomial_values(m, clip)
        d = abs(fa.mean() - fb.mean())
        se = float(np.sqrt(fa.var(ddof=1) / replicates + fb.var(ddof=1) / replicates))
        if best is None or d > best.estimate:
            best = EmpiricalDistance(float(d), se, m, clip)
    return best
