import numpy as np
import pytest

from divsim.graph import complete_graph, cycle_graph, path_graph, random_regular, star_graph


@pytest.fixture(scope="session")
def small_graphs():
    return {
        "K5": complete_graph(5),
        "P6": path_graph(6),
        "C7": cycle_graph(7),
        "star6": star_graph(6),
        "RR10_3": random_regular(10, 3, seed=5),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>3}: {'PASS' if ok else 'FAIL'}  {detail}")
