import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from chainlimit.chain import (
    ReversibleChain,
    check_reversibility,
    mixing,
    mixing_profile,
    normalize_chain,
    random_reversible_rates,
    scaled_kernel,
    stationary_distribution,
    transition_matrix,
    validate_rate_matrix,
)
from chainlimit.errors import Degenerate, NegativeRate, NotReversible, Reducible, RowSumViolation
from chainlimit.experiments import complete_graph

from conftest import normalized_chains, reversible_chains


def two_state_exp(a, b, t):
    """Closed-form exp(tQ) for Q = [[-a, a], [b, -b]]."""
    s = a + b
    e = math.exp(-s * t)
    return np.array([[b + a * e, a - a * e], [b - b * e, a + b * e]]) / s


# validation


def test_symmetric_two_state_is_valid_and_irreducible():
    r = validate_rate_matrix([[-1, 1], [1, -1]])
    assert r.irreducible and r.n == 2


def test_absorbing_state_flags_reducible():
    r = validate_rate_matrix([[-1, 1], [0, 0]])
    assert not r.irreducible
    with pytest.raises(Reducible):
        stationary_distribution(r)


def test_row_sum_violation_names_row():
    with pytest.raises(RowSumViolation) as exc:
        validate_rate_matrix([[-1, 2], [1, -1]])
    assert exc.value.row == 0


def test_negative_rate():
    with pytest.raises(NegativeRate) as exc:
        validate_rate_matrix([[0.5, -0.5], [1, -1]])
    assert (exc.value.row, exc.value.col) == (0, 1)


def test_tiny_negative_is_clamped():
    r = validate_rate_matrix([[-1, 1, -1e-12], [1, -2, 1], [1, 1, -2]], tol=1e-9)
    assert r.entries[0, 2] == 0.0
    assert np.allclose(r.entries.sum(axis=1), 0, atol=1e-15)


@pytest.mark.parametrize("bad", [[[0.0]], [[-1, 1, 0], [1, -1, 0]], [[np.nan, 0], [0, 0]]])
def test_malformed_inputs(bad):
    with pytest.raises(ValueError):
        validate_rate_matrix(bad)


def test_duplicate_labels_rejected():
    with pytest.raises(ValueError):
        validate_rate_matrix([[-1, 1], [1, -1]], labels=["a", "a"])


# stationary law and reversibility


def test_symmetric_generator_has_uniform_law():
    assert np.array_equal(stationary_distribution(complete_graph(4).rate), np.full(4, 0.25))


def test_birth_death_two_state_law():
    r = validate_rate_matrix([[-1, 1], [2, -2]])
    assert np.allclose(stationary_distribution(r), [2 / 3, 1 / 3], atol=1e-14)
    assert check_reversibility(r, [2 / 3, 1 / 3]).reversible


def test_rotating_three_cycle_is_not_reversible():
    q = np.array([[-3, 2, 1], [1, -3, 2], [2, 1, -3]], dtype=float)
    r = validate_rate_matrix(q)
    pi = stationary_distribution(r)
    assert np.allclose(pi, 1 / 3)
    check = check_reversibility(r, pi)
    assert not check.reversible and check.max_violation == pytest.approx(1 / 3)
    with pytest.raises(NotReversible):
        ReversibleChain(r)
    with pytest.raises(NotReversible):
        scaled_kernel(r, pi, 1.0)


@given(reversible_chains(3, 12))
def test_stationary_residual(chain):
    assert np.max(np.abs(chain.pi @ chain.Q)) < 1e-10
    assert np.all(chain.pi > 0) and abs(chain.pi.sum() - 1) < 1e-14


# transition matrices against closed forms and scipy


def test_transition_at_zero_is_identity(two_state):
    assert np.array_equal(transition_matrix(two_state, 0.0), np.eye(2))


def test_two_state_diagonal_closed_form(two_state):
    p = transition_matrix(two_state, 1.0)
    assert p[0, 0] == pytest.approx((1 + math.exp(-2)) / 2, abs=1e-14)
    assert p[0, 0] == pytest.approx(0.567668, abs=1e-6)


@pytest.mark.parametrize("a,b,t", [(1, 2, 0.3), (0.5, 3, 1.7), (4, 0.1, 2.0)])
def test_birth_death_exponential(a, b, t):
    r = validate_rate_matrix([[-a, a], [b, -b]])
    for method in ("eigen", "expm", "auto"):
        assert np.allclose(transition_matrix(r, t, method), two_state_exp(a, b, t), atol=1e-13)


@given(reversible_chains(3, 10), st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_semigroup_and_scipy_agreement(chain, s, t):
    ps, pt, pst = (transition_matrix(chain, x) for x in (s, t, s + t))
    assert np.max(np.abs(ps @ pt - pst)) < 1e-9
    assert np.max(np.abs(pst - scipy.linalg.expm((s + t) * chain.Q))) < 1e-10
    assert np.max(np.abs(pst.sum(axis=1) - 1)) < 1e-10
    assert pst.min() >= 0


# mixing


def test_two_state_mixing(two_state):
    assert mixing(two_state, 1.0) == pytest.approx(1 + math.exp(-2), abs=1e-14)
    assert mixing(two_state, 1.0) == pytest.approx(1.135335, abs=1e-6)


def test_triangle_at_log2_over_3_has_G_two():
    c = complete_graph(3, math.log(2) / 3)
    assert mixing(c, 1.0) == pytest.approx(2.0, abs=1e-14)


@given(reversible_chains(3, 10))
def test_mixing_profile_invariants(chain):
    gap = -chain.generator_eigenvalues[1]
    grid = np.geomspace(1e-3, 20 / gap, 30)  # G - 1 stays above double rounding
    prof = mixing_profile(chain, grid)
    assert np.all(np.diff(prof.values) < 0)
    assert np.all(prof.values > 1)
    assert mixing(chain, 1e-9) == pytest.approx(chain.n, rel=1e-6)
    # trace route and spectral route
    for t, g in prof.rows():
        assert abs(chain.mixing(t) - g) < 1e-10


# normalization


def test_triangle_normalization_oracle():
    norm = normalize_chain(complete_graph(3))
    assert norm.time_rescale == pytest.approx(math.log(2) / 3, abs=1e-8)
    assert norm.mixing_at_one == pytest.approx(2.0, abs=1e-10)


def test_two_state_is_degenerate(two_state):
    with pytest.raises(Degenerate):
        normalize_chain(two_state)


def test_reducible_cannot_be_normalized():
    with pytest.raises(Reducible):
        normalize_chain(validate_rate_matrix([[-1, 1, 0], [0, 0, 0], [0, 0, 0]]))


def test_non_reversible_normalizes_through_trace():
    q = np.array([[-3, 2, 1], [1, -3, 2], [2, 1, -3]], dtype=float)
    norm = normalize_chain(validate_rate_matrix(q))
    assert norm.chain is None
    assert np.trace(scipy.linalg.expm(norm.rate.entries)) == pytest.approx(2.0, abs=1e-9)


@given(reversible_chains(3, 10))
def test_normalization_is_idempotent(chain):
    once = normalize_chain(chain)
    twice = normalize_chain(once.chain)
    assert abs(twice.time_rescale - 1) < 1e-6
    assert abs(np.trace(scipy.linalg.expm(once.rate.entries)) - 2) < 1e-9


# scaled kernel


def test_triangle_kernel_values(triangle):
    k = scaled_kernel(triangle.Q, triangle.pi, 1.0).entries
    assert np.allclose(np.diag(k), 2.0, atol=1e-12)
    assert np.allclose(k[~np.eye(3, dtype=bool)], 0.5, atol=1e-12)


@given(normalized_chains(), st.floats(0.05, 4.0))
def test_scaled_kernel_invariants(chain, t):
    k = scaled_kernel(chain.Q, chain.pi, t).entries
    assert np.max(np.abs(k - k.T)) < 1e-9
    assert np.max(np.abs(k @ chain.pi - 1)) < 1e-9
    assert k.min() >= 0
    # pi-weighted trace equals the trace of P_t
    assert abs(float(chain.pi @ np.diag(k)) - mixing(chain.rate, t)) < 1e-9
    # spectral route
    assert np.max(np.abs(chain.kernel(t) - k)) < 1e-8


def test_corpus_generator_is_seeded():
    a = random_reversible_rates(8, 3)
    b = random_reversible_rates(8, 3)
    assert np.array_equal(a.entries, b.entries)
    assert check_reversibility(a, stationary_distribution(a), 1e-12).reversible
