import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quasicrack.config import canonical_spec  # noqa: E402
from quasicrack.evolution import run_evolution  # noqa: E402
from quasicrack.problem import build_problem  # noqa: E402

# criterion number -> list of (part, passed, detail), filled by test_acceptance
ACCEPTANCE: dict = {}

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def record(criterion: int, part: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))


@pytest.fixture
def canonical():
    """Builder for 1D canonical problems."""

    def make(kappa=1.0, dt=0.01, T=2.0, cells=4, strategy="exhaustive"):
        return build_problem(canonical_spec(kappa, dt, T, cells, strategy))

    return make


@pytest.fixture(scope="session")
def canonical_trace():
    problem = build_problem(canonical_spec())
    return problem, run_evolution(problem)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}")
        for part, passed, detail in parts:
            terminalreporter.write_line(f"    {'pass' if passed else 'FAIL'}  {part}  {detail}".rstrip())
