import dataclasses
from pathlib import Path

import pytest

from qpconv import config

ROOT = Path(__file__).resolve().parents[1]
AC6_CONFIG = ROOT / "configs" / "ac6_quantum.json"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ac6_cfg():
    return config.load(AC6_CONFIG)


@pytest.fixture
def tiny_cfg(ac6_cfg):
    """AC-6 setup cut down to a few seconds of training."""
    small = dataclasses.replace(ac6_cfg.dataset, train_per_class=20, test_per_class=10)
    return ac6_cfg.replace(dataset=small,
                           schedule=dataclasses.replace(ac6_cfg.schedule, epochs=2))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
