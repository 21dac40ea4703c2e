import shutil
import subprocess

import pytest

KAREL = shutil.which("karel")


def run_karel(*args: str) -> str:
    assert KAREL is not None, "toolchain CLI must be installed for these tests"
    proc = subprocess.run([KAREL, *args], capture_output=True, text=True, check=True)
    return proc.stdout


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("fixtures")


@pytest.fixture(scope="session")
def train_ds(fixture_dir):
    """Small background dataset: 60 tasks x 6 examples."""
    out = fixture_dir / "bg"
    run_karel("gen", "--seed", "1301", "--train", "60", "--examples-per-task", "6",
              "--out", str(out), "--workers", "2")
    return out / "train.karelds"


@pytest.fixture(scope="session")
def test_ds(fixture_dir):
    """Tiny test split: 4 tasks x 9 examples (5 demos + 4 evals at n=5)."""
    out = fixture_dir / "test"
    run_karel("gen", "--seed", "1302", "--test", "4", "--examples-per-task", "9",
              "--out", str(out))
    return out / "test.karelds"
