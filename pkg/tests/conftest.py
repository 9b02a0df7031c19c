import numpy as np
import pytest

from pottstree.model import Configuration, ModelParams, sphere


def random_boundary(params: ModelParams, n: int, rng) -> Configuration:
    """Uniform random colors on the sphere just outside ``V_n``."""
    outer = sphere(params, n + 1)
    colors = rng.integers(1, params.q + 1, len(outer))
    return Configuration(params.q, dict(zip(outer, colors.tolist())))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_criteria: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_") or report.when != "call" and report.passed:
        return
    n = int(name.split("_")[2])
    _criteria.setdefault(n, [])
    if report.failed:
        _criteria[n].append(name)
    elif report.when == "call":
        _criteria[n].append("")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        failed = [x for x in _criteria[n] if x]
        status = "PASS" if not failed else f"FAIL ({len(failed)} of {len(_criteria[n])} checks failed)"
        terminalreporter.write_line(f"criterion {n}: {status}")
