"""Command-line entry point.

Subcommands: synth (write a synthetic dataset), build-prototypes (cluster the
train split into an initial store), evaluate (run the correction sweep and
emit a report plus figures), serve (start the HTTP service / web UI).

Every flag can also be set in a JSON config file passed via --config; keys are
the flag names with dashes replaced by underscores. Command-line values win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataio, report as report_mod
from .clustering import KMeansConfig, build_initial_prototypes
from .errors import InvalidConfig, ProtocorrectError
from .harness import ProtocolConfig, run_protocol_from_store


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in str(text).split(",") if part.strip())
    except ValueError as exc:
        raise InvalidConfig(f"expected comma-separated integers, got {text!r}") from exc


def _parse_budget(value) -> int | None:
    if value is None or value == "unlimited":
        return None
    return int(value)


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit CLI flags."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InvalidConfig("config file must hold a JSON object")
        for key, value in loaded.items():
            if key in merged:
                merged[key] = value
    for key in merged:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            merged[key] = cli_value
    return merged


def _add_config_flag(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file with flag values (CLI overrides it)")


def cmd_synth(args: argparse.Namespace) -> int:
    opts = _merge_config(
        args,
        {
            "classes": 10,
            "dim": 32,
            "per_class_train": 50,
            "per_class_test": 50,
            "sigma": 0.15,
            "seed": 0,
            "min_mean_distance": 0.5,
            "intrinsic_dim": None,
            "modes_per_class": 1,
            "mode_spread": 0.0,
            "benchmark": False,
            "out": None,
        },
    )
    if not opts["out"]:
        raise InvalidConfig("synth requires --out (dataset path base)")
    if opts["benchmark"]:
        from .benchmark import standard_benchmark_dataset

        cfg = standard_benchmark_dataset()
    else:
        cfg = dataio.SyntheticConfig(
            classes=int(opts["classes"]),
            dim=int(opts["dim"]),
            per_class_train=int(opts["per_class_train"]),
            per_class_test=int(opts["per_class_test"]),
            sigma=float(opts["sigma"]),
            seed=int(opts["seed"]),
            min_mean_distance=float(opts["min_mean_distance"]),
            intrinsic_dim=None if opts["intrinsic_dim"] is None else int(opts["intrinsic_dim"]),
            modes_per_class=int(opts["modes_per_class"]),
            mode_spread=float(opts["mode_spread"]),
        )
    dataset = dataio.generate_synthetic(cfg)
    pemb, meta = dataio.write_embeddings(dataset, opts["out"])
    print(f"wrote {len(dataset)} records ({cfg.classes} classes, dim {cfg.dim})")
    print(f"  {pemb}")
    print(f"  {meta}")
    return 0


def cmd_build_prototypes(args: argparse.Namespace) -> int:
    opts = _merge_config(
        args,
        {"train": None, "k": 3, "seed": 0, "max_iter": 100, "tol": 1e-6, "out": None},
    )
    if not opts["train"] or not opts["out"]:
        raise InvalidConfig("build-prototypes requires --train and --out")
    dataset = dataio.read_embeddings(opts["train"])
    store = build_initial_prototypes(
        dataset,
        KMeansConfig(
            k=int(opts["k"]),
            max_iter=int(opts["max_iter"]),
            tol=float(opts["tol"]),
            seed=int(opts["seed"]),
        ),
    )
    dataio.export_store(store, opts["out"])
    stats = store.stats()
    print(f"built {stats.total} prototypes over {len(stats.per_class)} classes -> {opts['out']}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    opts = _merge_config(
        args,
        {
            "store": None,
            "test": None,
            "shots": "1,2,3,4,5,7,10,20,50",
            "seeds": "0",
            "budget": None,
            "include_support": False,
            "protect_server": False,
            "out": None,
            "format": "table",
            "figures": True,
        },
    )
    if not opts["store"] or not opts["test"]:
        raise InvalidConfig("evaluate requires --store and --test")
    shots = opts["shots"] if isinstance(opts["shots"], (list, tuple)) else _parse_int_list(opts["shots"])
    seeds = opts["seeds"] if isinstance(opts["seeds"], (list, tuple)) else _parse_int_list(opts["seeds"])
    cfg = ProtocolConfig(
        shots=tuple(shots),
        seeds=tuple(seeds),
        budget=_parse_budget(opts["budget"]),
        include_support_in_acc_e=bool(opts["include_support"]),
        protect_server=bool(opts["protect_server"]),
    )
    initial = dataio.import_store(opts["store"])
    test = dataio.read_embeddings(opts["test"])
    result = run_protocol_from_store(initial, test, cfg)
    print(report_mod.render_table(result), end="")
    if opts["out"]:
        out = Path(opts["out"])
        report_mod.emit_report(result, out, fmt=str(opts["format"]))
        print(f"report -> {out}")
        if opts["figures"]:
            stem = out.with_suffix("") if out.suffix else out
            for fig in report_mod.render_figures(result, stem):
                print(f"figure -> {fig}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    opts = _merge_config(
        args,
        {
            "host": "127.0.0.1",
            "port": 8080,
            "train": None,
            "test": None,
            "k": 3,
            "budget": None,
            "seed": 0,
            "open_class": False,
            "reveal_labels": False,
            "protect_server": False,
            "ui_dir": None,
        },
    )
    from .service import ServiceConfig, Session, create_app

    config = ServiceConfig(
        k=int(opts["k"]),
        budget=_parse_budget(opts["budget"]),
        protect_server=bool(opts["protect_server"]),
        open_class=bool(opts["open_class"]),
        reveal_labels=bool(opts["reveal_labels"]),
        cluster_seed=int(opts["seed"]),
    )
    session = None
    if opts["train"]:
        test_path = opts["test"] or opts["train"]
        session = Session.create(opts["train"], test_path, config)
        print(f"session {session.session_id}: acc_base {session.acc_base:.2f}%, "
              f"{len(session.d_e_ids)} misclassified of {len(session.d_c_ids) + len(session.d_e_ids)}")
    ui_dir = opts["ui_dir"]
    if ui_dir is None:
        candidate = Path.cwd() / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(session=session, config=config, ui_dir=ui_dir)

    import uvicorn

    uvicorn.run(app, host=str(opts["host"]), port=int(opts["port"]), log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protocorrect",
        description="prototype-based continual few-shot error correction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic embedding dataset")
    _add_config_flag(p)
    p.add_argument("--classes", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--per-class-train", type=int, dest="per_class_train")
    p.add_argument("--per-class-test", type=int, dest="per_class_test")
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--min-mean-distance", type=float, dest="min_mean_distance")
    p.add_argument("--intrinsic-dim", type=int, dest="intrinsic_dim",
                   help="draw all structure inside a subspace of this dimension")
    p.add_argument("--modes-per-class", type=int, dest="modes_per_class",
                   help="tight subclusters per class")
    p.add_argument("--mode-spread", type=float, dest="mode_spread",
                   help="Gaussian scale of subcluster offsets from the class mean")
    p.add_argument("--benchmark", action="store_const", const=True,
                   help="ignore other generator flags and emit the standard benchmark dataset")
    p.add_argument("--out", help="dataset path base (writes <out>.pemb and <out>.meta.jsonl)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-prototypes", help="cluster the train split into a store")
    _add_config_flag(p)
    p.add_argument("--train", help="dataset path base")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="store document path")
    p.set_defaults(func=cmd_build_prototypes)

    p = sub.add_parser("evaluate", help="run the few-shot correction sweep")
    _add_config_flag(p)
    p.add_argument("--store", help="initial store document")
    p.add_argument("--test", help="dataset path base with the test split")
    p.add_argument("--shots", help="comma-separated shot counts")
    p.add_argument("--seeds", help="comma-separated seeds")
    p.add_argument("--budget", help="prototype budget (integer or 'unlimited')")
    p.add_argument("--include-support", action="store_const", const=True,
                   dest="include_support", help="count support samples in Acc_E")
    p.add_argument("--protect-server", action="store_const", const=True,
                   dest="protect_server", help="exempt server prototypes from eviction")
    p.add_argument("--out", help="report output path")
    p.add_argument("--format", choices=report_mod.FORMATS)
    p.add_argument("--no-figures", action="store_const", const=False, dest="figures",
                   help="skip rendering PNG figures next to the report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="start the HTTP service and web UI")
    _add_config_flag(p)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--train", help="dataset path base used to build the session")
    p.add_argument("--test", help="dataset path base for the test split (defaults to --train)")
    p.add_argument("--k", type=int)
    p.add_argument("--budget", help="prototype budget (integer or 'unlimited')")
    p.add_argument("--seed", type=int)
    p.add_argument("--open-class", action="store_const", const=True, dest="open_class")
    p.add_argument("--reveal-labels", action="store_const", const=True, dest="reveal_labels")
    p.add_argument("--protect-server", action="store_const", const=True, dest="protect_server")
    p.add_argument("--ui-dir", dest="ui_dir", help="directory with the built web UI")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProtocorrectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
