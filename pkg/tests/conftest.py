import time
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from blassosep import MaxItersExceeded, SolverConfig, solve
from blassosep.baselines import frank_wolfe
from blassosep.synthesis import figure1, generate

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIG1_ALPHA = 0.05
FIG1_FP_TOL = 1e-8

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def acceptance(request):
    """``record(number, title, passed, detail)``: registers one criterion outcome.

    Every recorded criterion is printed as a PASS/FAIL line at the end of the run.
    """
    results = request.config.stash[_RESULTS]

    def record(number, title, passed, detail=""):
        results[number] = (title, bool(passed), detail)
        print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(results):
        title, passed, detail = results[number]
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})")


@pytest.fixture(scope="session")
def fig1():
    """Noiseless figure1 scenario, its tight dual-prox solve and the FW baseline."""
    spec = figure1()
    scen = generate(spec)
    cfg = SolverConfig(alpha=FIG1_ALPHA, fp_tol=FIG1_FP_TOL)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxItersExceeded)
        res = solve(scen.b, spec.patterns, cfg)
    solve_time = time.perf_counter() - t0
    t0 = time.perf_counter()
    fw = frank_wolfe(scen.b, spec.patterns, FIG1_ALPHA)
    fw_time = time.perf_counter() - t0
    return {"spec": spec, "scenario": scen, "cfg": cfg, "result": res, "solve_time": solve_time,
            "fw": fw, "fw_time": fw_time}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
