import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from laserstats.model import LaserParams, SchemeKind
from laserstats.steady import threshold_gamma

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

SCHEMES = [s.value for s in SchemeKind]


def log_uniform(lo, hi):
    return st.floats(min_value=math.log10(lo), max_value=math.log10(hi)).map(lambda x: 10.0**x)


@st.composite
def lasing_params(draw, scheme=None, gamma=True, finite=True):
    """Parameter sets with finite rates and gamma well below the lasing bound."""
    s = scheme if scheme is not None else draw(st.sampled_from(SCHEMES))
    p = LaserParams(
        s,
        N=draw(st.integers(min_value=100, max_value=100_000)),
        P=draw(log_uniform(1.0, 1e3)),
        ell=draw(st.integers(0, 1)),
        p_u=draw(log_uniform(10.0, 1e4)),
        p_d=draw(log_uniform(10.0, 1e4)),
        alpha=draw(log_uniform(0.3, 10.0)),
    )
    if gamma:
        frac = draw(st.floats(min_value=0.0, max_value=0.5))
        p = p.replace(gamma=frac * min(threshold_gamma(p), 1e4))
    return p


# -- acceptance summary ---------------------------------------------------

ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_report():
    """Record a criterion outcome; repeated reports for one criterion are merged."""

    def record(number, passed, detail):
        parts = ACCEPTANCE_LINES.setdefault(number, [])
        parts.append((passed, detail))
        ok = all(p for p, _ in parts)
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  " + " | ".join(d for _, d in parts)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            parts = ACCEPTANCE_LINES[k]
            ok = all(p for p, _ in parts)
            terminalreporter.write_line(
                f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  " + " | ".join(d for _, d in parts)
            )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
