"""Finite reversible continuous-time Markov chains.

A chain is given by its rate matrix ``Q`` (off-diagonal rates >= 0, rows
summing to 0).  For reversible irreducible chains every time-dependent
quantity is computed from one symmetric eigensolve of the generator
conjugated by ``diag(pi)**(1/2)``; non-reversible inputs fall back to
scipy's scaling-and-squaring ``expm``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    ChainError,
    Degenerate,
    EigensolveFailure,
    NegativeRate,
    NotReversible,
    NumericalOverflow,
    Reducible,
    RowSumViolation,
)

DEFAULT_TOL = 1e-9
# exp(tQ) entries in [-CLAMP_TOL, 0) are rounding noise; anything lower is a bug.
CLAMP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Validated generator of a finite chain.

    ``irreducible`` records strong connectivity of the graph of strictly
    positive rates.  Reducible matrices are representable but rejected by
    anything that needs a stationary distribution.
    """

    labels: tuple[str, ...]
    entries: np.ndarray
    irreducible: bool

    @property
    def n(self) -> int:
        return len(self.labels)

    def scaled(self, factor: float) -> "RateMatrix":
        entries = self.entries * float(factor)
        entries.setflags(write=False)
        return RateMatrix(self.labels, entries, self.irreducible)


def _is_strongly_connected(entries: np.ndarray) -> bool:
    adj = entries > 0
    np.fill_diagonal(adj, False)
    ncomp, _ = connected_components(csr_matrix(adj), directed=True, connection="strong")
    return ncomp == 1


def validate_rate_matrix(entries, tol: float = DEFAULT_TOL, labels: Sequence[str] | None = None) -> RateMatrix:
    """Check and freeze a rate matrix.

    Off-diagonal entries in ``[-tol, 0)`` are clamped to zero and each
    diagonal entry is reset to minus its row's off-diagonal sum, so the
    returned matrix has rows summing to zero exactly.

    Raises ``NegativeRate`` or ``RowSumViolation`` for the first offending
    entry/row.  Irreducibility is reported in the result, not raised.
    """
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ChainError(f"rate matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if n < 2:
        raise ChainError("a chain needs at least 2 states")
    if not np.all(np.isfinite(a)):
        raise ChainError("rate matrix has non-finite entries")
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise ChainError(f"{len(labels)} labels for {n} states")
    if len(set(labels)) != n:
        raise ChainError("state labels must be unique")

    off = ~np.eye(n, dtype=bool)
    bad = np.argwhere(off & (a < -tol))
    if len(bad):
        i, j = bad[0]
        raise NegativeRate(int(i), int(j), float(a[i, j]))
    sums = a.sum(axis=1)
    rows = np.flatnonzero(np.abs(sums) > tol)
    if len(rows):
        raise RowSumViolation(int(rows[0]), float(sums[rows[0]]))

    a[off & (a < 0)] = 0.0
    np.fill_diagonal(a, 0.0)
    np.fill_diagonal(a, -a.sum(axis=1))
    a.setflags(write=False)
    return RateMatrix(labels, a, _is_strongly_connected(a))


def _as_rate(Q) -> RateMatrix:
    if isinstance(Q, RateMatrix):
        return Q
    if isinstance(Q, ReversibleChain):
        return Q.rate
    return validate_rate_matrix(Q)


def stationary_distribution(Q) -> np.ndarray:
    """Unique stationary distribution of an irreducible chain.

    Solves ``pi Q = 0`` with one balance equation replaced by ``sum(pi) = 1``.
    Symmetric generators short-circuit to the uniform distribution.
    """
    Q = _as_rate(Q)
    if not Q.irreducible:
        raise Reducible("chain is reducible; stationary distribution is not unique")
    q = Q.entries
    n = Q.n
    if np.array_equal(q, q.T):
        return np.full(n, 1.0 / n)
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise Reducible(f"balance equations are singular: {exc}") from None
    # one refinement step
    r = b - a @ pi
    pi = pi + np.linalg.solve(a, r)
    if np.any(pi <= 0):
        raise Reducible("stationary solve produced non-positive mass")
    return pi / pi.sum()


class ReversibilityCheck(NamedTuple):
    reversible: bool
    max_violation: float


def check_reversibility(Q, pi, tol: float = DEFAULT_TOL) -> ReversibilityCheck:
    """Detailed balance: max |pi(x)Q(x,y) - pi(y)Q(y,x)| <= tol."""
    q = _as_rate(Q).entries
    flux = np.asarray(pi, dtype=float)[:, None] * q
    viol = float(np.max(np.abs(flux - flux.T)))
    return ReversibilityCheck(viol <= tol, viol)


class ReversibleChain:
    """An irreducible reversible chain together with its stationary law.

    Time-dependent quantities come from the eigendecomposition of the
    symmetrized generator ``S = D^(1/2) Q D^(-1/2)`` (``D = diag(pi)``),
    computed once and cached.
    """

    def __init__(self, rate, pi=None, tol: float = DEFAULT_TOL):
        rate = _as_rate(rate)
        if not rate.irreducible:
            raise Reducible("reversible chain must be irreducible")
        if pi is None:
            pi = stationary_distribution(rate)
        pi = np.array(pi, dtype=float)
        if pi.shape != (rate.n,) or np.any(pi <= 0):
            raise ChainError("stationary weights must be a positive vector of length n")
        pi = pi / pi.sum()
        check = check_reversibility(rate, pi, tol)
        if not check.reversible:
            raise NotReversible(f"detailed balance violated by {check.max_violation:.3g} (tol {tol:g})")
        pi.setflags(write=False)
        self.rate = rate
        self.pi = pi
        self._kernels: dict[float, np.ndarray] = {}

    @property
    def labels(self) -> tuple[str, ...]:
        return self.rate.labels

    @property
    def n(self) -> int:
        return self.rate.n

    @property
    def Q(self) -> np.ndarray:
        return self.rate.entries

    def __repr__(self):
        return f"ReversibleChain(n={self.n})"

    @cached_property
    def symmetrized(self) -> np.ndarray:
        r = np.sqrt(self.pi)
        s = r[:, None] * self.Q / r[None, :]
        return (s + s.T) / 2

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """(w, U): generator eigenvalues (descending, <= 0) and orthonormal U."""
        try:
            w, u = np.linalg.eigh(self.symmetrized)
        except np.linalg.LinAlgError as exc:
            raise EigensolveFailure(str(exc)) from None
        w = np.minimum(w[::-1], 0.0)
        return w, u[:, ::-1]

    @cached_property
    def generator_eigenvalues(self) -> np.ndarray:
        if "eig" in self.__dict__:
            return self.eig[0]
        try:
            w = np.linalg.eigvalsh(self.symmetrized)
        except np.linalg.LinAlgError as exc:
            raise EigensolveFailure(str(exc)) from None
        return np.minimum(w[::-1], 0.0)

    def mixing(self, t: float) -> float:
        """G(t) as the spectral sum of exp(t w_i)."""
        return float(np.exp(t * self.generator_eigenvalues).sum())

    def kernel(self, t: float) -> np.ndarray:
        """Scaled kernel p_t(x, y) = P_t(x, y) / pi(y), exactly symmetric."""
        t = float(t)
        k = self._kernels.get(t)
        if k is None:
            w, u = self.eig
            v = u / np.sqrt(self.pi)[:, None]
            k = (v * np.exp(t * w)) @ v.T
            k = (k + k.T) / 2
            k.setflags(write=False)
            self._kernels[t] = k
        return k

    def transition(self, t: float) -> np.ndarray:
        return self.kernel(t) * self.pi[None, :]

    def rescaled(self, factor: float) -> "ReversibleChain":
        """Same chain with time sped up by ``factor`` (eigen caches carried over)."""
        new = ReversibleChain.__new__(ReversibleChain)
        new.rate = self.rate.scaled(factor)
        new.pi = self.pi
        new._kernels = {}
        if "eig" in self.__dict__:
            w, u = self.eig
            new.__dict__["eig"] = (w * factor, u)
        if "generator_eigenvalues" in self.__dict__:
            new.__dict__["generator_eigenvalues"] = self.generator_eigenvalues * factor
        return new


def as_chain(Q, tol: float = DEFAULT_TOL) -> ReversibleChain:
    if isinstance(Q, ReversibleChain):
        return Q
    return ReversibleChain(_as_rate(Q), tol=tol)


def _try_chain(Q) -> ReversibleChain | None:
    if isinstance(Q, ReversibleChain):
        return Q
    if not Q.irreducible:
        return None
    try:
        return ReversibleChain(Q)
    except (NotReversible, Reducible):
        return None


def _clean_probabilities(p: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(p)):
        raise NumericalOverflow("matrix exponential overflowed")
    low = float(p.min())
    if low < -CLAMP_TOL:
        raise EigensolveFailure(f"matrix exponential has entry {low:.3g} < -{CLAMP_TOL:g}")
    return np.maximum(p, 0.0)


def transition_matrix(Q, t: float, method: str = "auto") -> np.ndarray:
    """P_t = exp(tQ).

    ``method`` is ``"eigen"`` (reversible chains only), ``"expm"``
    (scaling and squaring) or ``"auto"``: eigen when the chain is
    irreducible and reversible, expm otherwise.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    chain = Q if isinstance(Q, ReversibleChain) else None
    Q = _as_rate(Q)
    if t == 0:
        return np.eye(Q.n)
    if method == "auto":
        chain = chain or _try_chain(Q)
        method = "eigen" if chain is not None else "expm"
    if method == "eigen":
        chain = chain or as_chain(Q)
        return _clean_probabilities(chain.transition(t))
    if method != "expm":
        raise ValueError(f"unknown method {method!r}")
    with np.errstate(over="raise", invalid="raise"):
        try:
            p = scipy.linalg.expm(t * Q.entries)
        except (FloatingPointError, OverflowError, ValueError) as exc:
            raise NumericalOverflow(f"expm failed at t*|Q| = {t * np.abs(Q.entries).max():.3g}: {exc}") from None
    return _clean_probabilities(p)


def mixing(Q, t: float) -> float:
    """G(t): the trace of P_t."""
    return float(np.trace(transition_matrix(Q, t)))


@dataclass(frozen=True)
class MixingProfile:
    times: np.ndarray
    values: np.ndarray

    def rows(self):
        return [(float(t), float(g)) for t, g in zip(self.times, self.values)]


def mixing_profile(Q, grid) -> MixingProfile:
    chain = Q if isinstance(Q, ReversibleChain) else _try_chain(_as_rate(Q))
    src = chain if chain is not None else Q
    times = np.asarray(grid, dtype=float)
    values = np.array([mixing(src, t) for t in times])
    return MixingProfile(times, values)


@dataclass(frozen=True, eq=False)
class NormalizedChain:
    """A chain rescaled in time so that G(1) = 2."""

    rate: RateMatrix
    stationary: np.ndarray
    time_rescale: float
    mixing_at_one: float
    chain: ReversibleChain | None = None


def _bisect_normalization(G, max_iter: int = 200) -> float:
    lo, hi = 1e-8, 1.0
    for _ in range(max_iter):
        if G(lo) > 2:
            break
        lo /= 2
    else:
        raise Degenerate("could not bracket G(s) = 2 from below")
    for _ in range(max_iter):
        if G(hi) < 2:
            break
        hi *= 2
    else:
        raise Degenerate("could not bracket G(s) = 2 from above")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if G(mid) > 2:
            lo = mid
        else:
            hi = mid
    return lo if abs(G(lo) - 2) <= abs(G(hi) - 2) else hi


def normalize_chain(Q) -> NormalizedChain:
    """Find s* with trace(exp(s* Q)) = 2 by bisection and rescale Q by it.

    G is continuous and strictly decreasing from n to 1, so s* is unique for
    n >= 3.  Two-state chains have G(0) = 2 and are rejected as degenerate.
    """
    chain = Q if isinstance(Q, ReversibleChain) else None
    rate = _as_rate(Q)
    if rate.n == 2:
        raise Degenerate("2-state chains have G(0) = 2; no positive time rescale normalizes them")
    if not rate.irreducible:
        raise Reducible("cannot normalize a reducible chain")
    chain = chain or _try_chain(rate)
    if chain is not None:
        w = chain.generator_eigenvalues

        def G(s):
            return float(np.exp(s * w).sum())
    else:

        def G(s):
            return float(np.trace(scipy.linalg.expm(s * rate.entries)))

    s = _bisect_normalization(G)
    g1 = G(s)
    if abs(g1 - 2) > 1e-10:
        raise ChainError(f"normalization converged to G(1) = {g1!r}")
    if chain is not None:
        new = chain.rescaled(s)
        return NormalizedChain(new.rate, new.pi, s, g1, new)
    new_rate = rate.scaled(s)
    return NormalizedChain(new_rate, stationary_distribution(new_rate), s, g1, None)


@dataclass(frozen=True, eq=False)
class ScaledKernel:
    time: float
    entries: np.ndarray
    base_measure: np.ndarray


def scaled_kernel(Q, pi, t: float, tol: float = 1e-10) -> ScaledKernel:
    """p_t(x, y) = P_t(x, y) / pi(y), with P_t from scaling and squaring.

    Deliberately independent of the spectral route used by
    :meth:`ReversibleChain.kernel`, so the two can check each other.
    """
    pi = np.asarray(pi, dtype=float)
    p = transition_matrix(_as_rate(Q), t, method="expm")
    k = p / pi[None, :]
    asym = float(np.max(np.abs(k - k.T)))
    if asym > tol * max(1.0, float(np.abs(k).max())):
        raise NotReversible(f"scaled kernel asymmetric by {asym:.3g}")
    return ScaledKernel(float(t), k, pi)


def random_reversible_rates(n: int, seed: int = 0, density: float = 0.5, labels=None) -> RateMatrix:
    """A random irreducible reversible generator.

    Stationary weights are drawn proportional to U(0.5, 1.5) and symmetric
    conductances c(x, y) ~ U(0.1, 1) sit on a ring plus random extra edges
    (probability ``density``); the rates are Q(x, y) = c(x, y) / pi(x).
    """
    rng = np.random.default_rng(seed)
    pi = rng.uniform(0.5, 1.5, n)
    pi /= pi.sum()
    c = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    mask = rng.random(len(iu[0])) < density
    vals = rng.uniform(0.1, 1.0, len(iu[0]))
    c[iu] = np.where(mask, vals, 0.0)
    for i in range(n):
        j = (i + 1) % n
        a, b = min(i, j), max(i, j)
        if a != b and c[a, b] == 0:
            c[a, b] = rng.uniform(0.1, 1.0)
    c = c + c.T
    q = c / pi[:, None]
    np.fill_diagonal(q, -q.sum(axis=1))
    return validate_rate_matrix(q, labels=labels)
