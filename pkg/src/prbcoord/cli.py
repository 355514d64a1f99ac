"""Command line: ``prbcoord {topology,train,eval,plot}``.

Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .harness import (
    LEARNED,
    STRATEGIES,
    RecordsCsvError,
    TrainingAborted,
    evaluate,
    ordered_strategies,
    read_records_csv,
    summarize,
    train,
    write_curve_csv,
    write_records_csv,
    write_summary_csv,
)
from .learn.checkpoint import CheckpointError, load_policy, save_policy
from .learn.ppo import NonFiniteLoss

log = logging.getLogger("prbcoord")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def topology_report(cfg: RunConfig) -> str:
    topo = cfg.topology_obj()
    lines = ["cells:"]
    for c in topo.cells:
        p = topo.private_range(c.cell_id)
        lines.append(f"  gNB{c.cell_id}: PRBs [{c.prb_start}, {c.prb_stop}) priority={c.priority} "
                     f"private={topo.private_size(c.cell_id)} [{p.start}, {p.stop})")
    if topo.regions:
        lines.append("regions:")
        for r in topo.regions:
            lines.append(f"  region {r.region_id}: gNB{r.cell_hi} (hi) / gNB{r.cell_lo} (lo) "
                         f"size={r.size_prbs} PRBs [{r.prb_start}, {r.prb_stop})")
    lines.append(f"total={topo.total_prbs} unique={topo.unique_prbs}")
    return "\n".join(lines)


def cmd_topology(args) -> int:
    cfg = load_config(args.config)
    print(topology_report(cfg))
    return EXIT_OK


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out if args.out else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    episodes = cfg.harness.train_episodes if args.episodes is None else args.episodes
    if episodes <= 0:
        raise UsageError("--episodes must be positive")
    out = _out_dir(args, cfg)
    result = train(args.agent, cfg.env_config(train=True), episodes, seed, cfg.ppo, cfg.dqn,
                   log_every=args.log_every)
    ckpt = out / f"{args.agent}.ckpt"
    save_policy(result.agent, ckpt)
    write_curve_csv(result.curve, out / f"{args.agent}_curve.csv")
    print(f"wrote {ckpt} and {out / f'{args.agent}_curve.csv'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    unknown = [s for s in strategies if s not in STRATEGIES]
    if unknown:
        raise UsageError(f"unknown strategies {unknown}; choose from {','.join(STRATEGIES)}")
    out = _out_dir(args, cfg)
    ckpt_dir = Path(args.checkpoints) if args.checkpoints else out
    policies, failed = {}, {}
    for s in strategies:
        if s not in LEARNED:
            continue
        path = ckpt_dir / f"{s}.ckpt"
        try:
            policies[s] = load_policy(path, kind=s)
        except FileNotFoundError:
            failed[s] = f"missing checkpoint {path}"
        except CheckpointError as e:
            failed[s] = f"unreadable checkpoint {path}: {e}"
    h = cfg.harness
    records, errors = evaluate([s for s in strategies if s not in failed], cfg.env_config(train=False),
                               policies, h.eval_episodes, h.eval_steps, seed, cfg.slices,
                               static_hi_fraction=h.static_hi_fraction)
    errors.update(failed)
    for s, msg in sorted(errors.items()):
        print(f"error: {s}: {msg}", file=sys.stderr)
    write_records_csv(records, out / "records.csv")
    summaries = summarize(records)
    write_summary_csv(summaries, out / "summary.csv")
    for s in summaries:
        change = "" if s.qos_change_pct is None else f" ({s.qos_change_pct:+.1f}% vs best baseline)"
        print(f"{s.strategy:>9}: violations={s.qos_violations}{change} lost_prbs={s.lost_prbs_total} "
              f"throughput={s.throughput_mean_mbps:.2f}±{s.throughput_std_mbps:.2f} Mbps")
    if errors and not records:
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_plot(args) -> int:
    totals = read_records_csv(args.records)
    if not totals:
        raise RecordsCsvError(f"{args.records}: no records to plot")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "prbcoord"
    order = ordered_strategies(totals)
    labels = [s.upper() for s in order]
    for fname, title, values in (
        ("lost_prbs.svg", "Total PRBs lost to inter-cell interference", [totals[s].lost_prbs for s in order]),
        ("qos_violations.svg", "Total user QoS violations", [totals[s].qos_violations for s in order]),
    ):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.bar(labels, values, color="#4878a8")
        ax.set_title(title, fontsize=10)
        ax.tick_params(axis="x", labelsize=8)
        fig.tight_layout()
        fig.savefig(out / fname, format="svg", metadata={"Date": None})
        plt.close(fig)

    rows = ["| Model | Tput [Mbps] |", "|---|---|"]
    for s in order:
        vals = totals[s].aggregate_mbps
        rows.append(f"| {s.upper()} | {sum(vals) / len(vals):.2f} |")
    (out / "throughput_table.md").write_text("\n".join(rows) + "\n")
    print(f"wrote lost_prbs.svg, qos_violations.svg, throughput_table.md to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prbcoord", description="Coordinated inter-cell PRB allocation simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("topology", help="print the PRB layout")
    t.add_argument("--config")
    t.set_defaults(func=cmd_topology)

    tr = sub.add_parser("train", help="train a PPO or DQN agent")
    tr.add_argument("--config")
    tr.add_argument("--agent", choices=LEARNED, required=True)
    tr.add_argument("--episodes", type=int)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--out")
    tr.add_argument("--log-every", type=int, default=50)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="replay the evaluation script for several strategies")
    ev.add_argument("--config")
    ev.add_argument("--strategies", default=",".join(STRATEGIES))
    ev.add_argument("--seed", type=int)
    ev.add_argument("--out")
    ev.add_argument("--checkpoints", help="directory holding ppo.ckpt / dqn.ckpt (default: --out)")
    ev.set_defaults(func=cmd_eval)

    pl = sub.add_parser("plot", help="bar charts and throughput table from a records CSV")
    pl.add_argument("records")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, RecordsCsvError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (TrainingAborted, NonFiniteLoss, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
