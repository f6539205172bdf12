import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chainlimit.chain import mixing, scaled_kernel
from chainlimit.spectral import (
    EIGEN_FLOOR,
    continuity_check,
    decompose,
    kernel_from_spectrum,
    l2_norm,
    norm_identity_check,
    tail_mass,
)

from conftest import normalized_chains, reversible_chains


def test_triangle_spectrum(triangle):
    spec = decompose(triangle)
    assert np.allclose(spec.eigenvalues, [1, 0.5, 0.5], atol=1e-14)
    assert np.allclose(spec.vectors[0], 1.0, atol=1e-14)


def test_two_state_spectrum(two_state):
    spec = decompose(two_state)
    assert spec.eigenvalues[1] == pytest.approx(math.exp(-2), rel=1e-13)
    assert np.allclose(spec.vectors[1], [1, -1], atol=1e-14)  # sign convention: first big entry positive


@given(reversible_chains(3, 15))
def test_spectrum_invariants(chain):
    spec = decompose(chain)
    gram = (spec.vectors * chain.pi) @ spec.vectors.T
    assert np.max(np.abs(gram - np.eye(chain.n))) < 1e-9
    assert np.all(spec.eigenvalues > 0) and np.all(spec.eigenvalues <= 1 + 1e-10)
    assert np.all(np.diff(spec.eigenvalues) <= 0)
    assert abs(spec.eigenvalues.sum() - mixing(chain.rate, 1.0)) < 1e-9
    for v in spec.vectors:
        first = v[np.flatnonzero(np.abs(v) > 1e-8)[0]]
        assert first > 0


@given(normalized_chains(3, 10), st.sampled_from([0.25, 0.5, 1.0, 2.0, 3.0]))
def test_kernel_routes_agree(chain, t):
    spec = decompose(chain)
    a = kernel_from_spectrum(spec, t).entries
    b = scaled_kernel(chain.Q, chain.pi, t).entries
    assert np.max(np.abs(a - b)) < 1e-8
    assert abs(float(np.sum(spec.powers(t))) - mixing(chain.rate, t)) < 1e-9


def test_triangle_kernel_from_spectrum(triangle):
    spec = decompose(triangle)
    for t in (0.5, 1.0, 2.0):
        direct = scaled_kernel(triangle.Q, triangle.pi, t).entries
        assert np.max(np.abs(kernel_from_spectrum(spec, t).entries - direct)) < 1e-8
    assert np.allclose(np.diag(kernel_from_spectrum(spec, 1.0).entries), 2.0)
    assert np.allclose(kernel_from_spectrum(spec, 1.0, rank=1).entries, 1.0)


def test_tail_mass_examples(triangle):
    spec = decompose(triangle)
    assert tail_mass(spec, 3, 1.0) == 0.0
    assert tail_mass(spec, 0, 1.0) == pytest.approx(1.0, abs=1e-13)
    # sum over i > 1 of lambda_i**2 is the single term (1/2)**2
    assert tail_mass(spec, 1, 2.0) == pytest.approx(0.25, abs=1e-13)
    with pytest.raises(ValueError):
        tail_mass(spec, 4, 1.0)


@given(reversible_chains(3, 10))
def test_tail_mass_monotone_and_truncation_bound(chain):
    spec = decompose(chain)
    for t in (0.5, 1.0, 2.0):
        tails = [tail_mass(spec, k, t) for k in range(chain.n + 1)]
        assert all(a >= b for a, b in zip(tails, tails[1:]))
        full = kernel_from_spectrum(spec, t).entries
        for k in range(1, chain.n):
            trunc = kernel_from_spectrum(spec, t, rank=k).entries
            # modes are pi-orthonormal, so the truncation error is the norm of the tail
            assert l2_norm(full - trunc, chain.pi) <= tail_mass(spec, k - 1, t) + 1e-9
    assert all(tail_mass(spec, 1, 1.0) >= tail_mass(spec, 1, t) for t in (1.5, 2.0))


def test_norm_identity_closed_forms(two_state, triangle):
    r = norm_identity_check(two_state.Q, two_state.pi, 1.0)
    assert r.norm == pytest.approx(math.sqrt(1 + math.exp(-4)), abs=1e-12)
    assert r.norm == pytest.approx(1.009117, abs=1e-6)
    r = norm_identity_check(triangle.Q, triangle.pi, 1.0)
    assert r.norm == pytest.approx(math.sqrt(1.5), abs=1e-12) and r.passed


@given(reversible_chains(3, 20), st.sampled_from([0.25, 1.0, 3.0]))
def test_norm_identity_property(chain, t):
    assert norm_identity_check(chain.Q, chain.pi, t, 1e-9).passed


@given(normalized_chains(3, 8), st.floats(0.05, 2.0))
def test_positive_semidefinite_kernel(chain, t):
    k = chain.kernel(t)
    rng = np.random.default_rng(0)
    for v in rng.standard_normal((5, chain.n)):
        w = chain.pi * v
        assert w @ k @ w >= -1e-10


def test_continuity_closed_form(two_state):
    r = continuity_check(two_state.Q, two_state.pi, 1.0, 1.01)
    assert r.measured == pytest.approx((math.exp(-2) - math.exp(-2.02)) ** 2, rel=1e-6)
    assert r.measured == pytest.approx(7.2e-6, rel=0.02)
    assert r.holds
    assert continuity_check(two_state.Q, two_state.pi, 1.0, 1.0).measured == 0.0


@given(reversible_chains(3, 10), st.floats(0.05, 2.0))
def test_continuity_bound_and_decay(chain, t):
    measured = [continuity_check(chain, None, t, t + h) for h in (0.1, 0.01, 0.001)]
    assert all(r.holds for r in measured)
    assert measured[0].measured >= measured[1].measured >= measured[2].measured


def test_floor_is_counted():
    from chainlimit.experiments import complete_graph

    fast = complete_graph(3, 20.0)  # exp(-60) underflows the floor
    spec = decompose(fast)
    assert spec.floored == 2
    assert np.allclose(spec.eigenvalues[1:], EIGEN_FLOOR)
    assert spec.powers(0.01)[1] == pytest.approx(math.exp(-0.6))
