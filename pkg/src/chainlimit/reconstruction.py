"""Build a finite chain from kernel values sampled at i.i.d. states.

The sampled time-1 kernel M is renormalized by its row sums into a
stochastic matrix, which is then turned into a generator by an eigen-route
matrix logarithm.  Other times are recovered from that generator, never
sampled separately.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .chain import (
    RateMatrix,
    ReversibleChain,
    stationary_distribution,
    validate_rate_matrix,
)
from .density import array_distance, draw_states
from .errors import (
    ChainError,
    NonStochastic,
    NotPositiveDefinite,
    NotReversible,
    ZeroMixingWarning,
    ZeroRow,
)

LOG_FLOOR = 1e-12
PD_TOL = 1e-8
CLAMP_TOL = 1e-8


class MatrixLog(NamedTuple):
    rate: RateMatrix
    weights: np.ndarray
    floored: int
    clamped: int


def matrix_log_details(P, floor: float = LOG_FLOOR, weights=None, labels=None, clamp: float = CLAMP_TOL) -> MatrixLog:
    """Generator Q with exp(Q) = P for a reversible positive-definite stochastic P.

    ``weights`` are the detailed-balance weights w with w_i P_ij = w_j P_ji
    (any positive multiple of the stationary law).  When omitted they are
    taken uniform for symmetric P and solved for otherwise.  Eigenvalues of
    the symmetrized matrix below ``floor`` are raised to it before the log;
    off-diagonal entries of the log in [-clamp, 0) are set to zero and the
    diagonal is re-balanced.  Anything more negative raises NegativeRate:
    the log of a stochastic matrix need not be a generator.
    """
    p = np.array(P, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise NonStochastic(f"matrix must be square, got shape {p.shape}")
    n = p.shape[0]
    if p.min() < -CLAMP_TOL or np.max(np.abs(p.sum(axis=1) - 1)) > 1e-8:
        raise NonStochastic("rows must be nonnegative and sum to 1")
    if weights is None:
        if np.allclose(p, p.T, rtol=0, atol=1e-12):
            weights = np.ones(n)
        else:
            weights = stationary_distribution(validate_rate_matrix(p - np.eye(n), tol=1e-8))
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    r = np.sqrt(w)
    s = r[:, None] * p / r[None, :]
    asym = float(np.max(np.abs(s - s.T)))
    if asym > 1e-8:
        raise NotReversible(f"matrix is not symmetrizable by the given weights (asymmetry {asym:.3g})")
    mu, u = np.linalg.eigh((s + s.T) / 2)
    if mu.min() < -PD_TOL:
        raise NotPositiveDefinite(f"eigenvalue {mu.min():.3g} below -{PD_TOL:g}")
    floored = int(np.count_nonzero(mu < floor))
    logs = np.log(np.maximum(mu, floor))
    q = (u * logs) @ u.T
    q = q * r[None, :] / r[:, None]
    off = ~np.eye(n, dtype=bool)
    small = off & (q < 0) & (q >= -clamp)
    clamped = int(np.count_nonzero(small))
    q[small] = 0.0
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    rate = validate_rate_matrix(q, tol=max(clamp, CLAMP_TOL), labels=labels)
    return MatrixLog(rate, w, floored, clamped)


def matrix_log(P, floor: float = LOG_FLOOR, weights=None, labels=None, clamp: float = CLAMP_TOL) -> RateMatrix:
    return matrix_log_details(P, floor, weights, labels, clamp).rate


@dataclass(frozen=True, eq=False)
class KernelSample:
    """Time-1 kernel values M[i, j] = p_1(w_i, w_j) at sampled states."""

    matrix: np.ndarray
    states: np.ndarray
    labels: tuple[str, ...]
    seed: int | None = None

    @property
    def n(self) -> int:
        return len(self.states)


def subsample_kernel(chain, n: int, seed: int = 0) -> KernelSample:
    """Draw n states i.i.d. from pi (with replacement) and tabulate p_1 on them."""
    if n < 2:
        raise ValueError("sample size must be >= 2")
    states = draw_states(chain.pi, n, seed)
    k = chain.kernel(1.0)
    m = k[states[:, None], states[None, :]]
    names = getattr(chain, "labels", None) or [str(x) for x in range(len(chain.pi))]
    labels = tuple(f"{r}:{names[x]}" for r, x in enumerate(states))
    m.setflags(write=False)
    return KernelSample(m, states, labels, seed)


@dataclass(frozen=True, eq=False)
class ReconstructedChain:
    chain: ReversibleChain
    weights: np.ndarray  # row sums pi_(n) of the sampled kernel
    gamma: float
    floored: int
    clamped: int
    zero_mixing: bool = False

    @property
    def rate(self) -> RateMatrix:
        return self.chain.rate

    @property
    def stationary(self) -> np.ndarray:
        return self.chain.pi

    def kernel(self, t: float) -> np.ndarray:
        return self.chain.kernel(t)


def reconstruct_chain(sample, floor: float = LOG_FLOOR, clamp: float = CLAMP_TOL) -> ReconstructedChain:
    """Turn a sampled symmetric PSD kernel into a genuine reversible chain.

    Row weights pi_(n)(i) = sum_j M[i, j] normalize M into P = M / pi_(n);
    Q is the matrix logarithm of P and pi_(n) / gamma (gamma the total
    weight) its stationary distribution, which is verified independently.

    When the source generator has zero rates, the log carries O(n**-0.5)
    sampling noise of either sign at those entries, which the default
    ``clamp`` rejects; raise ``clamp`` to repair them explicitly.
    """
    if isinstance(sample, KernelSample):
        m, labels = np.asarray(sample.matrix, dtype=float), sample.labels
    else:
        m, labels = np.asarray(sample, dtype=float), None
    scale = max(1.0, float(np.abs(m).max()))
    if np.max(np.abs(m - m.T)) > 1e-10 * scale:
        raise NotReversible("sampled kernel is not symmetric")
    if m.min() < 0:
        raise NonStochastic("sampled kernel has negative entries")
    lo = float(np.linalg.eigvalsh((m + m.T) / 2).min())
    if lo < -PD_TOL * scale:
        raise NotPositiveDefinite(f"sampled kernel has eigenvalue {lo:.3g}")
    weights = m.sum(axis=1)
    if np.any(weights <= 0):
        raise ZeroRow(f"row {int(np.flatnonzero(weights <= 0)[0])} has zero weight")
    p = m / weights[:, None]
    log = matrix_log_details(p, floor, weights, labels, clamp)
    gamma = float(weights.sum())
    pi = weights / gamma
    solved = stationary_distribution(log.rate)
    dev = float(np.max(np.abs(solved - pi)))
    if dev > 1e-6:
        raise ChainError(f"reconstructed stationary law deviates from row weights by {dev:.3g}")
    chain = ReversibleChain(log.rate, pi, tol=1e-6)
    zero = chain.mixing(1.0) - 1.0 < 1e-6
    if zero:
        warnings.warn("reconstructed chain has no mixing left at t = 1 (all sampled states are twins)", ZeroMixingWarning, stacklevel=2)
    return ReconstructedChain(chain, weights, gamma, log.floored, log.clamped, zero)


class RoundtripReport(NamedTuple):
    n: int
    seed: int
    distance: float
    gamma_ratio: float
    max_weight_deviation: float
    floored: int
    clamped: int


def roundtrip_report(
    chain,
    n: int,
    seed: int = 0,
    k: int = 2,
    times: Sequence[float] = (0.5, 1.0, 2.0),
    degree: int = 2,
    floor: float = LOG_FLOOR,
    clamp: float = CLAMP_TOL,
) -> RoundtripReport:
    """Sample, reconstruct, and measure the moment distance back to the source.

    Also reports gamma / n**2 and max_i |pi_(n)(i) / n - 1|, both of which
    concentrate at their ideal values (1 and 0) as n grows.
    """
    rec = reconstruct_chain(subsample_kernel(chain, n, seed), floor, clamp)
    dist = array_distance(chain, rec.chain, k, times, degree)
    return RoundtripReport(
        n,
        seed,
        dist,
        rec.gamma / n**2,
        float(np.max(np.abs(rec.weights / n - 1))),
        rec.floored,
        rec.clamped,
    )
