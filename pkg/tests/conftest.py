import pytest

from rankone.model import c_critical, geometric, homogeneous, truncate_family, two_type

# (space, c) pairs used across the theory and branching suites
HOM = homogeneous()
TWO = two_type()
GEO = truncate_family(geometric(0.7), 1e-12)
TEST_MATRIX = [
    ("homogeneous", HOM, 0.5),
    ("two-type c=0.1", TWO, 0.1),
    ("two-type c=0.2", TWO, 0.2),
    ("two-type c=0.3", TWO, 0.3),
    ("geometric(0.7)", GEO, 0.5 * c_critical(GEO)),
]


@pytest.fixture(params=TEST_MATRIX, ids=[m[0] for m in TEST_MATRIX])
def matrix_model(request):
    _, space, c = request.param
    return space, c


# Acceptance criteria report one line each at the end of the run.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
