import pytest

from prbcoord.env import EnvConfig
from prbcoord.harness import train

# desk-scale training used by the harness and acceptance tests
TRAIN_EPISODES = 500
TRAIN_SEED = 0
EVAL_SEED = 0

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def trained_ppo():
    return train("ppo", EnvConfig(), TRAIN_EPISODES, TRAIN_SEED)


@pytest.fixture(scope="session")
def trained_dqn():
    return train("dqn", EnvConfig(), TRAIN_EPISODES, TRAIN_SEED)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
