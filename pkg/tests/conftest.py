import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ecapm.core import build_network

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def mc_mean_se(x, axis=0):
    """Sample mean and its standard error."""
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    return x.mean(axis=axis), x.std(axis=axis, ddof=1) / np.sqrt(n)


def mc_var_se(x, axis=0):
    """Sample variance and the standard error of that estimate."""
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    dev2 = (x - x.mean(axis=axis, keepdims=True)) ** 2
    return x.var(axis=axis, ddof=1), dev2.std(axis=axis, ddof=1) / np.sqrt(n)


@st.composite
def networks(draw, max_holders=6, max_issuers=6, min_links=0):
    N = draw(st.integers(1, max_holders))
    M = draw(st.integers(1, max_issuers))
    pairs = draw(
        st.lists(
            st.tuples(st.integers(0, N - 1), st.integers(0, M - 1)),
            unique=True,
            min_size=min(min_links, N * M),
            max_size=N * M,
        )
    )
    weights = draw(
        st.lists(
            st.floats(0.01, 1e3, allow_nan=False, allow_infinity=False),
            min_size=len(pairs),
            max_size=len(pairs),
        )
    )
    return build_network(N, M, [(i, a, w) for (i, a), w in zip(pairs, weights)])


@st.composite
def strength_pairs(draw, max_n=8, lo=0.1, hi=1e3):
    """Positive strength sequences with equal totals."""
    N = draw(st.integers(1, max_n))
    M = draw(st.integers(1, max_n))
    fl = st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    V = np.array(draw(st.lists(fl, min_size=N, max_size=N)))
    C = np.array(draw(st.lists(fl, min_size=M, max_size=M)))
    C = C * (V.sum() / C.sum())
    return V, C


@pytest.fixture
def example3():
    """The 2 x 3 network with edges (0,2,1.5), (1,0,2.5), (1,2,1.0)."""
    return build_network(2, 3, [(0, 2, 1.5), (1, 0, 2.5), (1, 2, 1.0)])


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE: list[str] = []


def record_criterion(number, title, ok, detail):
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
