import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from chainlimit.chain import ReversibleChain, normalize_chain, random_reversible_rates, validate_rate_matrix
from chainlimit.experiments import complete_graph

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def triangle():
    """3-state complete graph normalized: kernel 2 on the diagonal, 1/2 off it."""
    return normalize_chain(complete_graph(3)).chain


@pytest.fixture(scope="session")
def two_state():
    return ReversibleChain(validate_rate_matrix([[-1.0, 1.0], [1.0, -1.0]]))


@pytest.fixture(scope="session")
def small_corpus():
    return [ReversibleChain(random_reversible_rates(n, seed)) for seed, n in enumerate([3, 4, 5, 7, 9, 12])]


@st.composite
def reversible_chains(draw, n_min=3, n_max=8, density=None):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 10_000))
    if density is None:
        density = draw(st.floats(0.0, 1.0))
    return ReversibleChain(random_reversible_rates(n, seed, density))


@st.composite
def normalized_chains(draw, n_min=3, n_max=7, density=None):
    return normalize_chain(draw(reversible_chains(n_min, n_max, density))).chain


def pytest_configure(config):
    np.set_printoptions(precision=12)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
