import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chainlimit.chain import ReversibleChain, validate_rate_matrix
from chainlimit.density import Monomial, array_distance, exact_moment
from chainlimit.errors import ChainedMergeWarning, ChainError
from chainlimit.quotient import (
    almost_realizers,
    find_twins,
    partition_from_blocks,
    quotient_chain,
    split_state,
    twin_distance,
    twin_distance_matrix,
    type_of,
)
from chainlimit.spectral import decompose

from conftest import normalized_chains

TIMES = (0.5, 1.0, 2.0)


def spectral_twin_distance(chain, a, b):
    spec = decompose(chain)
    diff = spec.vectors[:, a] - spec.vectors[:, b]
    return math.sqrt(float(np.sum(spec.eigenvalues * diff**2)))


def kernel_twin_distance(chain, a, b):
    k = chain.kernel(1.0)
    return math.sqrt(max(k[a, a] + k[b, b] - 2 * k[a, b], 0.0))


def test_triangle_types(triangle):
    spec = decompose(triangle)
    for w in range(3):
        q = type_of(spec, w)
        assert q[0] == pytest.approx(1.0)
        assert float(np.sum(spec.eigenvalues * q**2)) == pytest.approx(2.0, abs=1e-12)


def test_types_are_equivariant_under_relabeling(small_corpus):
    chain = small_corpus[2]
    perm = np.array([3, 0, 4, 1, 2])
    permuted = ReversibleChain(validate_rate_matrix(chain.Q[np.ix_(perm, perm)]))
    a, b = decompose(chain), decompose(permuted)
    # eigenvectors may flip sign, so compare up to sign row by row (spectrum is simple here)
    assert np.all(np.diff(a.eigenvalues) < -1e-9)
    for va, vb in zip(a.vectors, b.vectors):
        assert np.allclose(va[perm], vb, atol=1e-9) or np.allclose(va[perm], -vb, atol=1e-9)


def test_triangle_twin_distances(triangle):
    assert twin_distance(triangle, 0, 0) == 0.0
    assert twin_distance(triangle, 0, 1) == pytest.approx(math.sqrt(3), abs=1e-12)
    assert twin_distance(triangle, "s0", "s2") == pytest.approx(1.732051, abs=1e-6)


@given(normalized_chains(3, 8), st.data())
def test_twin_distance_routes_agree(chain, data):
    a = data.draw(st.integers(0, chain.n - 1))
    b = data.draw(st.integers(0, chain.n - 1))
    d = twin_distance(chain, a, b)
    assert abs(d - spectral_twin_distance(chain, a, b)) < 1e-9
    assert abs(d - kernel_twin_distance(chain, a, b)) < 1e-7  # three-term form loses digits near 0


def test_split_triangle_preserves_array(triangle):
    split = split_state(triangle, 2, 0.3)
    assert split.n == 4
    assert split.labels[2:] == ("s2#1", "s2#2")
    assert twin_distance(split, 2, 3) < 1e-9
    assert array_distance(triangle, split, 3, TIMES, 3) < 1e-8


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2])
def test_split_fraction_must_be_interior(triangle, fraction):
    with pytest.raises(ValueError):
        split_state(triangle, 0, fraction)


def test_find_twins_on_split(triangle):
    split = split_state(triangle, 1, 0.5)
    part = find_twins(split, 1e-8)
    assert [b for b in part.blocks if len(b) > 1] == [(1, 2)]
    assert part.max_intra_distance < 1e-8


def test_random_chain_is_twin_free(small_corpus):
    for chain in small_corpus:
        assert find_twins(chain, 1e-8).trivial


def test_large_tolerance_merges_everything(triangle):
    dmax = twin_distance_matrix(triangle).max()
    with pytest.warns(ChainedMergeWarning):
        part = find_twins(triangle, dmax)
    assert part.blocks == ((0, 1, 2),)


def test_chained_merge_is_reported(triangle, monkeypatch):
    # three states on a line in type space: 0~1 and 1~2 within tol, 0 and 2 are not
    import chainlimit.quotient as qmod

    pts = np.array([0.0, 1.0, 2.0])
    monkeypatch.setattr(qmod, "twin_distance_matrix", lambda chain: np.abs(pts[:, None] - pts[None, :]))
    with pytest.warns(ChainedMergeWarning):
        part = qmod.find_twins(triangle, 1.0)
    assert part.blocks == ((0, 1, 2),) and part.max_intra_distance == 2.0


def test_quotient_identity_partition(triangle):
    assert quotient_chain(triangle, partition_from_blocks([[0], [1], [2]], 3)) is triangle


def test_quotient_single_block_rejected(triangle):
    with pytest.raises(ChainError):
        quotient_chain(triangle, partition_from_blocks([[0, 1, 2]], 3))


def test_partition_must_cover():
    with pytest.raises(ValueError):
        partition_from_blocks([[0, 1], [1, 2]], 3)


def test_split_then_quotient_round_trip(triangle):
    split = split_state(triangle, 0, 0.25)
    q = quotient_chain(split, find_twins(split, 1e-8))
    assert q.n == 3
    assert abs(q.pi.sum() - 1) < 1e-14
    assert np.max(np.abs(q.Q - triangle.Q)) < 1e-8
    assert array_distance(triangle, q, 3, TIMES, 3) < 1e-8


@given(normalized_chains(3, 6), st.data())
def test_split_quotient_properties(chain, data):
    w = data.draw(st.integers(0, chain.n - 1))
    alpha = data.draw(st.floats(0.05, 0.95))
    split = split_state(chain, w, alpha)
    assert array_distance(chain, split, 2, TIMES, 2) < 1e-8
    part = find_twins(split, 1e-8)
    assert [b for b in part.blocks if len(b) > 1] == [(w, w + 1)]
    q = quotient_chain(split, part)
    # moments with up to four indices survive the quotient
    m = Monomial.of((0, 1, 0.5), (1, 2, 1.0), (2, 3, 2.0), (3, 0, 1.0))
    assert abs(exact_moment(q, m) - exact_moment(split, m)) < 1e-8
    assert find_twins(q, 1e-8).trivial


def test_realizers(triangle):
    spec = decompose(triangle)
    q = type_of(spec, 0)
    r = almost_realizers(spec, q, [0, 1, 2], 1e-6)
    assert r.states == (0,) and r.measure == pytest.approx(1 / 3) and r.wide
    everything = almost_realizers(triangle, q, [0, 1, 2], 10.0)
    assert everything.states == (0, 1, 2) and everything.measure == pytest.approx(1.0)
    bad = q.copy()
    bad[0] = 5.0
    none = almost_realizers(spec, bad, [0], 0.5)
    assert none.states == () and not none.wide


@given(normalized_chains(3, 7), st.floats(1e-6, 1.0))
def test_every_state_type_is_wide(chain, eps):
    spec = decompose(chain)
    for w in range(chain.n):
        assert almost_realizers(spec, type_of(spec, w), range(chain.n), eps).measure >= chain.pi[w]
