"""Eigendecomposition of the time-1 scaled kernel and the identities built on it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chain import ReversibleChain, ScaledKernel, mixing, scaled_kernel
from .errors import ChainError

EIGEN_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs of p_1 in L^2(pi), sorted by decreasing eigenvalue.

    ``vectors[i]`` is the pi-orthonormal eigenvector nu_i (``vectors[0]``
    is the constant 1).  ``eigenvalues`` are floored at ``EIGEN_FLOOR``;
    powers lambda_i**t are always taken from the unfloored
    ``log_eigenvalues`` so fast modes stay exact at small t.
    """

    eigenvalues: np.ndarray
    log_eigenvalues: np.ndarray
    vectors: np.ndarray
    base_measure: np.ndarray
    floored: int = 0

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def powers(self, t: float) -> np.ndarray:
        return np.exp(t * self.log_eigenvalues)

    def rows(self):
        for i, (lam, v) in enumerate(zip(self.eigenvalues, self.vectors)):
            yield (i, float(lam), *map(float, v))


def _chain(Q, pi=None) -> ReversibleChain:
    if isinstance(Q, ReversibleChain) and pi is None:
        return Q
    if isinstance(Q, ReversibleChain):
        return ReversibleChain(Q.rate, pi)
    return ReversibleChain(Q, pi)


def decompose(Q, pi=None) -> Spectrum:
    """Spectrum of a reversible irreducible chain.

    The symmetrized generator D^(1/2) Q D^(-1/2) shares its eigenvectors
    with D^(1/2) P_1 D^(-1/2); we solve the former and exponentiate, which
    keeps the logarithms of tiny eigenvalues exact.  Eigenvectors are
    back-transformed by D^(-1/2) and signed so that their first entry of
    magnitude > 1e-8 is positive.
    """
    chain = _chain(Q, pi)
    w, u = chain.eig
    vecs = (u / np.sqrt(chain.pi)[:, None]).T.copy()
    for v in vecs:
        big = np.flatnonzero(np.abs(v) > 1e-8)
        if len(big) and v[big[0]] < 0:
            v *= -1
    lam = np.exp(w)
    floored = int(np.count_nonzero(lam < EIGEN_FLOOR))
    lam = np.maximum(lam, EIGEN_FLOOR)
    for a in (lam, w, vecs):
        a.setflags(write=False)
    return Spectrum(lam, w, vecs, chain.pi, floored)


def kernel_from_spectrum(spec: Spectrum, t: float, rank: int | None = None) -> ScaledKernel:
    """sum_i lambda_i**t nu_i(x) nu_i(y), optionally truncated to the top ``rank`` modes."""
    v = spec.vectors if rank is None else spec.vectors[:rank]
    p = spec.powers(t)[: len(v)]
    k = v.T @ (p[:, None] * v)
    return ScaledKernel(float(t), (k + k.T) / 2, spec.base_measure)


def tail_mass(spec: Spectrum, k: int, t: float) -> float:
    """sum over i > k of lambda_i**t (0 <= k <= n)."""
    if not 0 <= k <= spec.n:
        raise ValueError(f"k must lie in [0, {spec.n}]")
    return float(spec.powers(t)[k + 1 :].sum())


def l2_norm(kernel: np.ndarray, pi: np.ndarray) -> float:
    """Norm in L^2(pi x pi)."""
    return float(np.sqrt(np.einsum("i,j,ij->", pi, pi, kernel**2)))


class NormIdentityReport(NamedTuple):
    norm: float
    sqrt_mixing: float
    deviation: float
    passed: bool


def norm_identity_check(Q, pi, t: float, tol: float = 1e-9) -> NormIdentityReport:
    """Compare ||p_t||_{L^2(pi x pi)} with sqrt(G(2t)).

    The kernel comes from scaling and squaring, G from the trace of P_2t,
    so the two sides are computed along different routes.
    """
    pi = np.asarray(pi, dtype=float)
    norm = l2_norm(scaled_kernel(Q, pi, t).entries, pi)
    root = float(np.sqrt(mixing(Q, 2 * t)))
    dev = abs(norm - root)
    return NormIdentityReport(norm, root, dev, dev <= tol)


class ContinuityReport(NamedTuple):
    measured: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.measured <= self.bound


def continuity_check(Q, pi, t: float, s: float) -> ContinuityReport:
    """||p_t - p_s||^2 in L^2(pi x pi) against (t-s)^2 |Q|^2 exp(4 min(s,t) |Q|).

    |Q| is the Hilbert-Schmidt norm of the symmetrized generator, the norm
    in which the L^2(pi x pi) distance of kernels is measured.
    """
    if t <= 0 or s <= 0:
        raise ChainError("continuity check needs t, s > 0")
    chain = _chain(Q, pi)
    diff = chain.kernel(t) - chain.kernel(s)
    measured = l2_norm(diff, chain.pi) ** 2
    qn = float(np.linalg.norm(chain.symmetrized))
    with np.errstate(over="ignore"):  # an infinite bound is still a valid bound
        bound = (t - s) ** 2 * qn**2 * np.exp(4 * min(s, t) * qn)
    return ContinuityReport(measured, float(bound))
