import pytest

from wristhrv import synth

ACCEPTANCE_LINES: list[str] = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow measurement tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    """Call with (criterion id, passed, detail) to get a summary line at the end of the run."""

    def record(cid: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{cid} {'PASS' if passed else 'FAIL'} {detail}")

    return record


@pytest.fixture(scope="session")
def short_session():
    """Twenty minutes: ten at rest, ten at intensity 0.6."""
    cfg = synth.SynthConfig(seed=11, duration_s=1200, activity_profile=[(600, 1200, 0.6)])
    return synth.generate(cfg)
