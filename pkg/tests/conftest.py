import numpy as np
import pytest

from cbcpir.scheme import TOY, Params, Variant


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=list(Variant), ids=lambda v: v.value)
def toy(request):
    return Params(**TOY, variant=request.param)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
