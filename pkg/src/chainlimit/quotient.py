"""Types of states, twins, and the twin-free quotient of a finite chain."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .chain import ReversibleChain, validate_rate_matrix
from .errors import ChainedMergeWarning, ChainError
from .reconstruction import LOG_FLOOR, matrix_log
from .spectral import Spectrum, decompose

# exchange rate between split twins: their kernel rows differ by O(exp(-rate * t))
DEFAULT_TWIN_RATE = 200.0


def _index(chain, state) -> int:
    if isinstance(state, (int, np.integer)):
        return int(state)
    return chain.labels.index(str(state))


def type_of(spec: Spectrum, state: int) -> np.ndarray:
    """tp(w)(i) = nu_i(w) for every eigenvector."""
    return np.array(spec.vectors[:, state])


def _half_rows(chain: ReversibleChain) -> np.ndarray:
    # rows of p_{1/2} scaled into L^2(pi): d(x, y) is the Euclidean row distance
    return chain.kernel(0.5) * np.sqrt(chain.pi)[None, :]


def twin_distance(chain: ReversibleChain, a, b) -> float:
    """sqrt(p_1(a,a) + p_1(b,b) - 2 p_1(a,b)), the lambda-weighted type distance.

    Evaluated as the L^2(pi) distance between rows of p_{1/2} (the same
    quantity by Chapman-Kolmogorov), which avoids the cancellation in the
    three-term form and stays accurate down to ~1e-15 for near-twins.
    """
    rows = _half_rows(chain)
    i, j = _index(chain, a), _index(chain, b)
    return float(np.linalg.norm(rows[i] - rows[j]))


def twin_distance_matrix(chain: ReversibleChain) -> np.ndarray:
    return squareform(pdist(_half_rows(chain)))


def split_state(chain: ReversibleChain, state, fraction: float, twin_rate: float = DEFAULT_TWIN_RATE) -> ReversibleChain:
    """Replace one state by two twins carrying ``fraction`` and ``1 - fraction`` of its mass.

    Rates into the state are divided between the twins in proportion to
    their mass, rates out are copied, and the twins swap at a rate of
    order ``twin_rate``.  The antisymmetric twin mode then decays at rate
    ``twin_rate - Q(w, w)`` and every other mode is the original chain's,
    so the density array is the original one up to exp(-twin_rate * t).
    The twins are placed at positions w and w + 1.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    w = _index(chain, state)
    n = chain.n
    q = chain.Q
    a = fraction
    order = list(range(w + 1)) + [w] + list(range(w + 1, n))  # old state for each new index
    new = q[np.ix_(order, order)].astype(float)
    new[:, w] *= a
    new[:, w + 1] *= 1 - a
    new[w, w + 1] = twin_rate * (1 - a)
    new[w + 1, w] = twin_rate * a
    np.fill_diagonal(new, 0.0)
    np.fill_diagonal(new, -new.sum(axis=1))
    pi = chain.pi[order].astype(float)
    pi[w] *= a
    pi[w + 1] *= 1 - a
    label = chain.labels[w]
    labels = list(chain.labels[:w]) + [f"{label}#1", f"{label}#2"] + list(chain.labels[w + 1 :])
    return ReversibleChain(validate_rate_matrix(new, labels=labels), pi)


@dataclass(frozen=True)
class StatePartition:
    blocks: tuple[tuple[int, ...], ...]
    max_intra_distance: float
    tol: float

    @property
    def trivial(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def block_of(self) -> np.ndarray:
        out = np.empty(sum(len(b) for b in self.blocks), dtype=int)
        for k, b in enumerate(self.blocks):
            out[list(b)] = k
        return out


def find_twins(chain: ReversibleChain, tol: float = 1e-8) -> StatePartition:
    """Single-linkage clusters of states at twin distance <= tol.

    An all-singleton result certifies the chain twin-free at ``tol``.
    Warns (``ChainedMergeWarning``) if a block's diameter exceeds ``tol``
    or if every state collapses into one block.
    """
    d = twin_distance_matrix(chain)
    ncomp, comp = connected_components(csr_matrix(d <= tol), directed=False)
    groups: dict[int, list[int]] = {}
    for x, c in enumerate(comp):
        groups.setdefault(int(c), []).append(x)
    blocks = tuple(sorted(tuple(g) for g in groups.values()))
    diam = max((float(d[np.ix_(b, b)].max()) for b in blocks if len(b) > 1), default=0.0)
    if diam > tol:
        warnings.warn(f"single linkage chained states {diam:.3g} apart (tol {tol:g})", ChainedMergeWarning, stacklevel=2)
    elif len(blocks) == 1 and chain.n > 1:
        warnings.warn("all states merged into a single block", ChainedMergeWarning, stacklevel=2)
    return StatePartition(blocks, diam, tol)


def partition_from_blocks(blocks: Sequence[Sequence[int]], n: int) -> StatePartition:
    blocks = tuple(sorted(tuple(sorted(int(x) for x in b)) for b in blocks))
    flat = sorted(x for b in blocks for x in b)
    if flat != list(range(n)) or any(len(b) == 0 for b in blocks):
        raise ValueError("blocks must be nonempty and cover each state exactly once")
    return StatePartition(blocks, float("nan"), float("nan"))


def quotient_chain(chain: ReversibleChain, partition: StatePartition, floor: float = LOG_FLOOR) -> ReversibleChain:
    """Merge each block into one state.

    Block masses add; the block kernel is the pi-weighted average of the
    time-1 kernel over pairs of blocks, turned back into a generator by the
    matrix logarithm.  Exact-twin blocks leave the density array unchanged.
    """
    if partition.blocks == tuple((x,) for x in range(chain.n)):
        return chain
    nb = len(partition.blocks)
    if nb < 2:
        raise ChainError("quotient by a single block leaves a one-state space")
    member = np.zeros((chain.n, nb))
    for k, b in enumerate(partition.blocks):
        member[list(b), k] = 1.0
    pi = chain.pi
    mass = member.T @ pi
    weighted = (pi[:, None] * chain.kernel(1.0)) * pi[None, :]
    block_kernel = member.T @ weighted @ member / np.outer(mass, mass)
    p = block_kernel * mass[None, :]
    p = p / p.sum(axis=1, keepdims=True)
    labels = ["+".join(chain.labels[x] for x in b) for b in partition.blocks]
    rate = matrix_log(p, floor, weights=mass, labels=labels)
    return ReversibleChain(rate, mass, tol=1e-6)


class Realizers(NamedTuple):
    states: tuple[int, ...]
    measure: float

    @property
    def wide(self) -> bool:
        return self.measure > 0


def almost_realizers(chain, q, indices, eps: float) -> Realizers:
    """States w with |q(i) - nu_i(w)| < eps for all i in ``indices``, and their pi-mass."""
    spec = chain if isinstance(chain, Spectrum) else decompose(chain)
    idx = list(indices)
    q = np.asarray(q, dtype=float)
    close = np.all(np.abs(spec.vectors[idx, :] - q[idx, None]) < eps, axis=0)
    states = tuple(int(x) for x in np.flatnonzero(close))
    return Realizers(states, float(spec.base_measure[list(states)].sum()))
