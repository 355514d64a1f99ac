"""Train both agents, evaluate all five strategies and draw the charts.

    python scripts/run_experiment.py --episodes 500 --seed 0 --out runs/exp0
"""
import argparse
import sys
from pathlib import Path

from prbcoord.cli import main as cli


def run(episodes: int, seed: int, out: Path, config: str | None) -> int:
    common = ["--seed", str(seed), "--out", str(out)] + (["--config", config] if config else [])
    for agent in ("ppo", "dqn"):
        code = cli(["train", "--agent", agent, "--episodes", str(episodes), *common])
        if code:
            return code
    code = cli(["eval", *common])
    if code:
        return code
    return cli(["plot", str(out / "records.csv"), "--out", str(out / "plots")])


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("runs/experiment"))
    p.add_argument("--config")
    a = p.parse_args()
    sys.exit(run(a.episodes, a.seed, a.out, a.config))
