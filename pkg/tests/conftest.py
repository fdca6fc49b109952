import sys
import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from phamp.integrate import Flow
from phamp.models import get_model
from phamp.solver import AccuracyDomain, solve


@pytest.fixture(scope="session")
def solved():
    """Session-wide cache of solved parameterizations, one per model.

    ``solved("rt")`` returns a namespace with the model, a warmed-up
    flow, the parameterization K, its accuracy domain, and the wall
    time of the solve (jit warm-up excluded).
    """
    cache: dict[str, SimpleNamespace] = {}

    def _get(name: str) -> SimpleNamespace:
        if name not in cache:
            model = get_model(name)
            flow = Flow(model)
            x = np.asarray(model.seed, dtype=float)
            flow(x, 1e-3)                       # trigger jit compilation
            flow.with_variational(x, 1e-3)
            t0 = time.perf_counter()
            K = solve(model, flow=flow)
            dt = time.perf_counter() - t0
            cache[name] = SimpleNamespace(
                model=model, flow=flow, K=K, solve_seconds=dt,
                domain=AccuracyDomain(K))
        return cache[name]

    return _get


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260824)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    tw = terminalreporter
    tw.section("acceptance criteria")
    for num, ok, detail in sorted(mod.RESULTS):
        tw.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
