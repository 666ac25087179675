import shutil
import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
TOY = FIXTURES / "toy"
HRP = FIXTURES / "hrp"
CORPUS = FIXTURES / "corpus"
TRANSCRIPTS = FIXTURES / "transcripts"
BIN = FIXTURES / "bin"
HRP_IDS = ("ec", "lt", "nr", "ss")

MOCK_SOLVER = [sys.executable, str(BIN / "mock_solver.py")]
MOCK_LEARNER = f"{sys.executable} {BIN / 'mock_learner.py'}"


def real_solver() -> list[str] | None:
    """Command for a real clingo, if one is available."""
    if shutil.which("clingo"):
        return ["clingo"]
    try:
        import clingo  # noqa: F401
    except ImportError:
        return None
    return [sys.executable, "-m", "clingo"]


@pytest.fixture
def toy_paths():
    return TOY / "house.lp", [TOY / "ex1.lp"], [TOY / "ex1.model"]


@pytest.fixture
def hrp_paths():
    inst = HRP / "instances"
    return HRP / "encoding.lp", [inst / f"{i}.lp" for i in HRP_IDS], [inst / f"{i}.model" for i in HRP_IDS]


@pytest.fixture(autouse=True)
def _no_env_overrides(monkeypatch):
    monkeypatch.delenv("HEULEARN_SOLVER", raising=False)
    monkeypatch.delenv("HEULEARN_LEARNER", raising=False)
