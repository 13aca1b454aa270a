import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from schubmap.weyl import Permutation

settings.register_profile(
    "default",
    deadline=None,
    max_examples=int(os.environ.get("HYPOTHESIS_EXAMPLES", "60")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@st.composite
def permutations(draw, min_r=1, max_r=5):
    r = draw(st.integers(min_r, max_r))
    return Permutation(tuple(draw(st.permutations(range(1, r + 1)))))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
