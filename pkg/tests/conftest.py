from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from linshadow.core import SeqVector

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rationals(max_num=20, max_den=16, nonzero=False):
    s = st.builds(Fraction, st.integers(-max_num, max_num), st.integers(1, max_den))
    return s.filter(bool) if nonzero else s


def vectors(max_index=6, **kw):
    return st.dictionaries(st.integers(0, max_index), rationals(**kw), max_size=max_index + 1).map(SeqVector)


def e(i, c=1):
    return SeqVector.basis(i, coeff=c)


@pytest.fixture
def e0():
    return e(0)


@pytest.fixture
def e1():
    return e(1)


# acceptance results, one line per criterion, printed at the end of the session
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
