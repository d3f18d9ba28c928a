"""Command-line front end: ``uavfl run | compare | validate-config``.

Exit codes: 0 success, 2 configuration error, 3 training halted by a failure
(partial outputs are still written). Set ``LOG_LEVEL`` to error, info or
debug to change verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from uavfl import __version__
from uavfl.config import ExperimentConfig, config_to_dict, parse_config, serialize_config
from uavfl.errors import ConfigError
from uavfl.harness import MetricsTable, compare, run_experiment
from uavfl.protocol import HALTED
from uavfl.svg import bar_chart, line_chart

EXIT_OK, EXIT_CONFIG, EXIT_HALTED = 0, 2, 3

log = logging.getLogger("uavfl")


def _setup_logging():
    level = os.environ.get("LOG_LEVEL", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level, logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _load(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "scheme", None) is not None:
        changes["scheme"] = args.scheme
    return cfg.with_(**changes).validate() if changes else cfg


def _write_manifest(out: Path, command: str, args, cfg: ExperimentConfig, status: str, files):
    (out / "config.toml").write_text(serialize_config(cfg))
    manifest = {
        "tool": "uavfl",
        "version": __version__,
        "command": command,
        "config_path": str(args.config) if args.config else None,
        "master_seed": cfg.master_seed,
        "output_dir": str(out),
        "status": status,
        "outputs": sorted(files),
        "resolved_config": config_to_dict(cfg),
        "rerun": f"uavfl {command} --config {out / 'config.toml'} --out <DIR>",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _run_charts(table: MetricsTable) -> dict[str, str]:
    rounds = [r.round for r in table.rows]
    loss = line_chart(
        {f"{table.scheme} average": (rounds, [r.avg_loss for r in table.rows])}
        | {
            f"UAV {i}": (rounds, [r.losses[i] for r in table.rows])
            for i in table.uav_ids
        },
        "Loss per round", "communication round", "cross-entropy loss",
    )
    latency = line_chart(
        {table.scheme: (rounds, [r.cumulative_latency_s for r in table.rows])},
        "Cumulative training latency", "communication round", "latency (s)",
    )
    return {"loss.svg": loss, "latency.svg": latency}


def cmd_run(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = run_experiment(cfg)
    files = {"metrics.csv": table.to_csv(), **_run_charts(table)}
    for name, text in files.items():
        (out / name).write_text(text)
    _write_manifest(out, "run", args, cfg, table.status, files)
    print(f"{cfg.scheme}: {len(table.rows)} rounds, status {table.status}, outputs in {out}")
    return EXIT_HALTED if table.status == HALTED else EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = compare(cfg.with_(scheme="dfl").validate(), cfg.with_(scheme="fedavg").validate())
    a, b = summary.label_a, summary.label_b
    ids = [i for i in summary.table_a.uav_ids if i in summary.table_b.uav_ids]
    fa, fb = summary.table_a.final_losses, summary.table_b.final_losses
    files = {
        "compare.csv": summary.to_csv(),
        f"metrics_{a}.csv": summary.table_a.to_csv(),
        f"metrics_{b}.csv": summary.table_b.to_csv(),
        "avg_loss.svg": line_chart(
            {a: (summary.rounds, list(summary.avg_loss_a)),
             b: (summary.rounds, list(summary.avg_loss_b))},
            "Average loss", "communication round", "average cross-entropy loss",
        ),
        "individual_loss.svg": bar_chart(
            [f"UAV {i}" for i in ids],
            {a: [fa[i] for i in ids], b: [fb[i] for i in ids]},
            "Individual loss after training", "cross-entropy loss",
        ),
        "latency.svg": line_chart(
            {a: (summary.rounds, list(summary.cumulative_latency_a)),
             b: (summary.rounds, list(summary.cumulative_latency_b))},
            "Training latency", "communication round", "cumulative latency (s)",
        ),
    }
    for name, text in files.items():
        (out / name).write_text(text)
    halted = HALTED in (summary.table_a.status, summary.table_b.status)
    _write_manifest(out, "compare", args, cfg, "halted" if halted else "ok", files)
    print(
        f"avg_loss_gap={summary.final_avg_loss_gap:.6g} "
        f"max_individual_gap={summary.final_max_individual_gap:.6g} "
        f"latency_delta_s={summary.final_latency_delta:.6g}"
    )
    return EXIT_HALTED if halted else EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)
    sys.stdout.write(serialize_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavfl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"uavfl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scheme and write metrics.csv and charts")
    run.add_argument("--config", type=Path, help="TOML config (defaults if omitted)")
    run.add_argument("--seed", type=int, help="override scheme.master_seed")
    run.add_argument("--out", type=Path, required=True, help="output directory")
    run.add_argument("--scheme", choices=("dfl", "fedavg"), help="override scheme.name")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run DFL and FedAvg on the same setup")
    cmp_.add_argument("--config", type=Path)
    cmp_.add_argument("--seed", type=int)
    cmp_.add_argument("--out", type=Path, required=True)
    cmp_.set_defaults(func=cmd_compare)

    val = sub.add_parser("validate-config", help="parse a config and print it fully resolved")
    val.add_argument("--config", type=Path, required=True)
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
