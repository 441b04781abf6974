import sys
from pathlib import Path

import numpy as np
import pytest

from binloss import (
    AttributeSpace,
    affine_1d_model,
    constant_model,
    gaussian_mixture_model,
    scaled_profile_model,
)
from binloss.model import gaussian_sum

sys.path.insert(0, str(Path(__file__).parent))


def bump_profile(a):
    return gaussian_sum(a, 0.5, [dict(amplitude=3.0, center=0.4, width=0.1)])


def _draw_constant(rng):
    return rng.uniform(0.5, 5.0, 1)


def _draw_affine(rng):
    t0 = rng.uniform(0.5, 2.0)
    return np.array([t0, rng.uniform(-0.8 * t0, 2.0)])


def _draw_scaled(rng):
    return rng.uniform(0.5, 5.0, 1)


def _draw_g1(rng):
    return np.array([rng.uniform(1, 8), rng.uniform(0.3, 0.7), rng.uniform(0.08, 0.2), rng.uniform(0.1, 1.0)])


def _draw_g2_1d(rng):
    return np.array([rng.uniform(1, 8), rng.uniform(0.15, 0.4), rng.uniform(0.06, 0.15),
                     rng.uniform(1, 8), rng.uniform(0.6, 0.85), rng.uniform(0.06, 0.15),
                     rng.uniform(0.1, 1.0)])


def _draw_g_2d(rng):
    return np.array([rng.uniform(1, 8), *rng.uniform(0.3, 0.7, 2), rng.uniform(0.1, 0.25),
                     rng.uniform(0.1, 1.0)])


def zoo():
    """(id, model, theta sampler, per-axis count sequence for M = 1, 2, 4, 8, 16)."""
    one_d = [(1,), (2,), (4,), (8,), (16,)]
    two_d = [(1, 1), (2, 1), (2, 2), (4, 2), (4, 4)]
    return [
        ("constant", constant_model(3.7), _draw_constant, one_d),
        ("affine-1d", affine_1d_model(), _draw_affine, one_d),
        ("scaled-profile", scaled_profile_model(bump_profile, amplitude=2.0), _draw_scaled, one_d),
        ("gaussian-mixture", gaussian_mixture_model(), _draw_g1, one_d),
        ("gaussian-mixture-2", gaussian_mixture_model(2), _draw_g2_1d, one_d),
        ("gaussian-mixture-2d", gaussian_mixture_model(1, AttributeSpace([0, 0], [1, 1])), _draw_g_2d, two_d),
    ]


ZOO = zoo()


@pytest.fixture(params=ZOO, ids=[z[0] for z in ZOO])
def zoo_entry(request):
    return request.param


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion
# ---------------------------------------------------------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].split("[")[0]
    prev = _ACCEPTANCE.get(name, "passed")
    if report.when == "call" or report.outcome != "passed":
        _ACCEPTANCE[name] = "failed" if (report.outcome == "failed" or prev == "failed") else report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        status = {"passed": "PASS", "failed": "FAIL"}.get(_ACCEPTANCE[name], _ACCEPTANCE[name].upper())
        terminalreporter.write_line(f"{status}  {name}")
