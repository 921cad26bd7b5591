import numpy as np
import pytest

# filled by test_acceptance.py: criterion id -> (passed, detail)
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (len(k), k)):
        passed, detail = ACCEPTANCE_RESULTS[key]
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
