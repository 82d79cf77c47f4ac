import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def torus2_complex():
    from novmorse.morse import FlowConfig, build_morse_complex, get_model

    return build_morse_complex(get_model("torus_2"), FlowConfig())


@pytest.fixture(scope="session")
def sphere2_complex():
    from novmorse.morse import FlowConfig, build_morse_complex, get_model

    return build_morse_complex(get_model("sphere2"), FlowConfig())


@pytest.fixture(scope="session")
def torus3_complex():
    from novmorse.morse import FlowConfig, build_morse_complex, get_model

    return build_morse_complex(get_model("torus_3"), FlowConfig())


_CRITERIA: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    name = report.nodeid.split("::")[-1]
    if "test_acceptance.py" in report.nodeid and name.startswith("test_criterion_"):
        k = int(name.split("_")[2])
        _CRITERIA.setdefault(k, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        outcomes = _CRITERIA[k]
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {k}: {status} ({len(outcomes)} checks)")
