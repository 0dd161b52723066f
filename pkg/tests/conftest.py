from fractions import Fraction

import pytest

from screwcohom.lattice import validate
from screwcohom.spectrum import ScrewMotion

ORDER2 = [[0, 1, 0], [1, 0, 0], [0, 0, -1]]  # half turn about (1, 1, 0)
ORDER3 = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]  # third turn about (1, 1, 1)
ORDER4 = [[0, -1, 0], [1, 0, 0], [0, 0, 1]]  # quarter turn about z
ORDER4X = [[1, 0, 0], [0, 0, -1], [0, 1, 0]]  # quarter turn about x


def make_screw(matrix, t):
    return ScrewMotion(tuple(Fraction(c) for c in t), validate(matrix))


SCREWS = {
    "order2": make_screw(ORDER2, ["1/2", "0", "1/4"]),
    "order3": make_screw(ORDER3, ["1/3", "1/3", "1/3"]),
    "order4": make_screw(ORDER4, ["1/4", "1/2", "1/8"]),
    "order4x": make_screw(ORDER4X, ["1/3", "1/5", "1/7"]),
    "translation": make_screw([[1, 0, 0], [0, 1, 0], [0, 0, 1]], ["1/2", "1/3", "0"]),
}


@pytest.fixture(params=sorted(SCREWS))
def screw(request):
    return SCREWS[request.param]


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
