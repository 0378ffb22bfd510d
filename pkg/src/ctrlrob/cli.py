"""Command-line entry point: ``ctrlrob <command> [options]``.

Commands: generate, simulate, dataset, train, predict, evaluate, plot.

Every option can also come from a flat ``key=value`` file given with
``--config`` (keys are option names with dashes or underscores); options on
the command line win.  Each run writes the resolved settings next to its
outputs.

Exit codes: 0 success, 2 usage, 3 I/O, 4 validation, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4, 5
SNAPSHOT_NAME = "run_config.cfg"

log = logging.getLogger("ctrlrob")


class UsageError(Exception):
    pass


# -- argument types -----------------------------------------------------------


def _positive_float(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _size(text):
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"network size must be >= 2, got {text}")
    return v


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(t) for t in str(text).split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


# -- parser -------------------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="flat key=value settings file; flags override it")
    p.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")


def build_parser():
    parser = argparse.ArgumentParser(prog="ctrlrob", description="Controllability robustness of directed networks.")
    parser.add_argument("--version", action="store_true", help="print version and the hash of the default settings")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("generate", help="write synthetic networks as edge lists")
    _common(p)
    p.add_argument("--topology", choices=["er", "sf", "qsn", "sw"], default="er")
    p.add_argument("--n", type=_size, default=64)
    p.add_argument("--k", type=_positive_float, default=4.0, help="average degree")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=_positive_int, default=1, help="graphs to write (seeds seed, seed+1, ...)")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--sf-sigma", type=float, default=0.999)
    p.add_argument("--sf-theta", type=float, default=1.0)
    p.add_argument("--qsn-rq", type=_positive_int, default=1)
    p.add_argument("--sw-K", type=_positive_int, default=2)
    p.add_argument("--png", action="store_true", help="also write each adjacency image as PNG")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("simulate", help="attack graphs and record controllability curves")
    _common(p)
    p.add_argument("graphs", nargs="+", help="edge-list files")
    p.add_argument("--strategy", choices=["ra", "tba", "tda"], default="ra")
    p.add_argument("--kind", choices=["structural", "state"], default="structural")
    p.add_argument("--tol", type=_positive_float, default=1e-10, help="rank tolerance for state controllability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="curves.csv")

    p = sub.add_parser("dataset", help="build an (image, curve) dataset")
    _common(p)
    p.add_argument("--n", type=_size, default=64)
    p.add_argument("--topologies", type=_csv_list(str), default="er,sf,qsn,sw")
    p.add_argument("--degrees", type=_csv_list(float), default="4,8")
    p.add_argument("--count", type=_positive_int, default=250, help="instances per (topology, degree) cell")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--strategy", choices=["ra", "tba", "tda"], default="ra")
    p.add_argument("--kind", choices=["structural", "state"], default="structural")
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=_positive_int, default=None, help="default: CTRLROB_WORKERS or all cores")
    p.add_argument("--out", default="dataset")

    p = sub.add_parser("train", help="train the CNN on a dataset")
    _common(p)
    p.add_argument("--data", default=None, help="dataset directory or manifest")
    p.add_argument("--epochs", type=_positive_int, default=10)
    p.add_argument("--width", type=_positive_float, default=0.125, help="channel multiplier on the full-size widths")
    p.add_argument("--groups", type=_positive_int, default=None, help="conv groups (default from N)")
    p.add_argument("--fc2", type=_positive_int, default=None)
    p.add_argument("--loss", choices=["l1", "l2"], default="l1")
    p.add_argument("--lr", type=_positive_float, default=0.005)
    p.add_argument("--batch-size", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0, help="model seed")
    p.add_argument("--shuffle-seed", type=int, default=0)
    p.add_argument("--out", default="model.ckpt")

    p = sub.add_parser("predict", help="predict curves for graphs or a dataset split")
    _common(p)
    p.add_argument("graphs", nargs="*", help="edge-list files (alternative to --data)")
    p.add_argument("--model", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--split", choices=["train", "validation", "test"], default="test")
    p.add_argument("--out", default="predictions.csv")

    p = sub.add_parser("evaluate", help="error / std report on a dataset split")
    _common(p)
    p.add_argument("--model", default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--split", choices=["train", "validation", "test"], default="test")
    p.add_argument("--out", default="report")

    p = sub.add_parser("plot", help="plot pv / tv / er / st curves")
    _common(p)
    p.add_argument("--report", default=None, help="report directory written by evaluate")
    p.add_argument("--curves", nargs="*", default=[], help="curve CSV files (e.g. from simulate)")
    p.add_argument("--linear", action="store_true", help="linear instead of log y axis")
    p.add_argument("--out", default="plots")
    return parser


def _subparsers(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


def default_settings(parser=None) -> dict:
    parser = parser or build_parser()
    out = {}
    for name, sp in sorted(_subparsers(parser).items()):
        out[name] = {
            a.dest: a.default
            for a in sp._actions
            if a.dest not in ("help", "config", "verbose") and a.default is not argparse.SUPPRESS
        }
    return out


def defaults_hash() -> str:
    from .cnn import default_config

    blob = {"cli": default_settings(), "cnn64": default_config(64).to_dict(), "version": __version__}
    return hashlib.sha256(json.dumps(blob, sort_keys=True, default=str).encode()).hexdigest()


def read_config_file(path) -> dict:
    settings = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        settings[key.strip().replace("-", "_")] = value.strip()
    return settings


def _apply_config(sp, settings):
    by_dest = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in settings.items():
        action = by_dest.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"unknown setting {key!r} in config file")
        if isinstance(action, argparse._StoreTrueAction):
            low = value.lower()
            if low not in ("1", "0", "true", "false", "yes", "no"):
                raise UsageError(f"setting {key!r} must be a boolean, got {value!r}")
            defaults[key] = low in ("1", "true", "yes")
        elif not action.option_strings:
            raise UsageError(f"positional argument {key!r} cannot come from a config file")
        elif action.nargs in ("+", "*"):
            defaults[key] = value.split()
        else:
            try:
                defaults[key] = action.type(value) if action.type else value
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"setting {key!r}: {exc}") from exc
    sp.set_defaults(**defaults)


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        # the subcommand is the first token that names one
        subs = _subparsers(parser)
        cmd = next((a for a in argv if a in subs), None)
        if cmd is None:
            raise UsageError("--config needs a command")
        _apply_config(subs[cmd], read_config_file(known.config))
    return parser, parser.parse_args(argv)


def resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose", "version")}


def write_snapshot(args, path: Path) -> Path:
    """Resolved settings as ``key=value`` lines (no timestamps, so reruns match).

    ``path`` may be a directory, in which case the file is ``run_config.cfg``
    inside it.
    """
    path = Path(path)
    if path.is_dir():
        path = path / SNAPSHOT_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# ctrlrob {__version__}"]
    for k, v in resolved(args).items():
        if isinstance(v, (list, tuple)):
            v = " ".join(map(str, v)) if k in ("graphs", "curves") else ",".join(map(str, v))
        lines.append(f"{k}={'' if v is None else v}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _snapshot_for_file(args, out_file: Path):
    """Snapshot next to a single-file output, named after it."""
    return write_snapshot(args, out_file.parent / f"{out_file.name}.{SNAPSHOT_NAME}")


# -- commands -----------------------------------------------------------------


def cmd_generate(args):
    from .dataset import export_png, to_image
    from .graph import write_edge_list
    from .netgen import GenSpec, generate

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(args.count):
        spec = GenSpec(
            args.topology,
            args.n,
            args.k,
            weighted=args.weighted,
            seed=args.seed + i,
            sf_sigma=args.sf_sigma,
            sf_theta=args.sf_theta,
            qsn_rq=args.qsn_rq,
            sw_K=args.sw_K,
        )
        g = generate(spec)
        stem = f"{args.topology}_n{args.n}_k{args.k:g}_s{args.seed + i}"
        write_edge_list(g, out / f"{stem}.txt")
        if args.png:
            export_png(to_image(g), out / f"{stem}.png")
        written.append(stem)
        log.info("wrote %s (%d edges)", stem, g.edge_count)
    write_snapshot(args, out)
    print(f"wrote {len(written)} graph(s) to {out}")
    return EXIT_OK


def cmd_simulate(args):
    from .attack import sample_rng, simulate_curve
    from .control import driver_count
    from .graph import read_edge_list

    out = Path(args.out)
    rows, header = [], [f"# strategy={args.strategy} kind={args.kind} seed={args.seed}"]
    for i, path in enumerate(args.graphs):
        g = read_edge_list(path)
        nd = driver_count(g, args.kind, args.tol)
        line = f"# {Path(path).name}: N={g.node_count} M={g.edge_count} source n_D={nd.count}/{g.node_count}={nd.density:.6g}"
        print(line[2:])
        header.append(line)
        curve = simulate_curve(g, args.strategy, args.kind, args.tol, sample_rng(args.seed, i))
        rows.append((Path(path).stem, curve.values))
    out.parent.mkdir(parents=True, exist_ok=True)
    body = [",".join([sid] + [repr(float(v)) for v in vals]) for sid, vals in rows]
    out.write_text("\n".join(header + body) + "\n")
    _snapshot_for_file(args, out)
    print(f"wrote {len(rows)} curve(s) to {out}")
    return EXIT_OK


def cmd_dataset(args):
    from .dataset import build_dataset, grid

    cells = grid(args.n, tuple(args.topologies), tuple(args.degrees), args.count, args.weighted)
    t0 = time.perf_counter()
    man = build_dataset(cells, args.strategy, args.kind, args.seed, args.out, args.workers, args.tol)
    write_snapshot(args, Path(args.out))
    sizes = {s: len(man.split(s)) for s in ("train", "validation", "test")}
    print(
        f"{len(man.entries)} samples ({sizes['train']}/{sizes['validation']}/{sizes['test']}), "
        f"{len(man.errors)} failed, {time.perf_counter() - t0:.1f} s -> {args.out}"
    )
    for e in man.errors:
        print(f"  sample {e['id']} ({e['topology']}, k={e['avg_degree']:g}): {e['message']}", file=sys.stderr)
    return EXIT_OK


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) in (None, "", [])]
    if missing:
        raise UsageError(f"{args.command} needs --{missing[0].replace('_', '-')}")


def cmd_train(args):
    from .cnn import build_model, default_config, save_model, train
    from .dataset import read_manifest

    _need(args, "data")
    man = read_manifest(args.data)
    kw = dict(epochs=args.epochs, loss=args.loss, lr=args.lr, batch_size=args.batch_size, seed=args.seed)
    if args.fc2 is not None:
        kw["fc2"] = args.fc2
    cfg = default_config(man.n, width=args.width, groups=args.groups, **kw)
    model = build_model(cfg)

    def progress(rec):
        print(f"epoch {rec['epoch']}: train {rec['train_loss']:.5f}  validation {rec['val_loss']:.5f}", flush=True)

    train(model, man, args.shuffle_seed, progress=progress)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    _snapshot_for_file(args, out)
    print(f"best epoch {model.best_epoch}; checkpoint {out} (config {cfg.config_hash()[:12]})")
    return EXIT_OK


def cmd_predict(args):
    from .attack import write_curves_csv
    from .cnn import load_model, predict
    from .dataset import load_dataset, to_image
    from .graph import read_edge_list

    _need(args, "model")
    if not args.graphs and not args.data:
        raise UsageError("predict needs graph files or --data")
    model = load_model(args.model)
    rows = []
    t0 = time.perf_counter()
    if args.graphs:
        for path in args.graphs:
            rows.append((Path(path).stem, predict(model, to_image(read_edge_list(path)))))
    else:
        for s in load_dataset(args.data, args.split):
            rows.append((s.sample_id, predict(model, s.image)))
    dt = time.perf_counter() - t0
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_curves_csv(rows, out)
    _snapshot_for_file(args, out)
    print(f"wrote {len(rows)} prediction(s) to {out} ({1e3 * dt / max(1, len(rows)):.2f} ms each)")
    return EXIT_OK


def cmd_evaluate(args):
    from .cnn import evaluate, load_model, write_report
    from .dataset import load_dataset

    _need(args, "model", "data")
    model = load_model(args.model)
    report = evaluate(model, load_dataset(args.data, args.split))
    out = Path(args.out)
    paths = write_report(report, out)
    write_snapshot(args, out)
    print(paths["summary"].read_text(), end="")
    return EXIT_OK


def _read_report_dir(path):
    from .cnn import _read_rows

    ids, labels, pv = _read_rows(Path(path) / "predictions.csv")
    _, _, tv = _read_rows(Path(path) / "truth.csv")
    curves = {}
    for line in (Path(path) / "er_st.csv").read_text().splitlines()[1:]:
        cell, _, er, st = line.split(",")
        curves.setdefault(cell, ([], []))
        curves[cell][0].append(float(er))
        curves[cell][1].append(float(st))
    return labels, pv, tv, curves


def cmd_plot(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .attack import read_curves_csv

    if not args.report and not args.curves:
        raise UsageError("plot needs --report and/or --curves")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    made = []

    def finish(fig, ax, name):
        ax.set_xlabel("proportion of removed nodes")
        ax.set_ylabel("controllability $n_D$")
        if not args.linear:
            ax.set_yscale("log")
        ax.set_xlim(0, 1)
        ax.legend(loc="best", fontsize=8)
        path = out / f"{name}.png"
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
        made.append(path)

    if args.report:
        labels, pv, tv, curves = _read_report_dir(args.report)
        for cell in sorted(set(labels)):
            rows = [i for i, l in enumerate(labels) if l == cell]
            x = np.arange(1, pv.shape[1] + 1) / (pv.shape[1] + 1)
            fig, ax = plt.subplots(figsize=(5, 3.6))
            ax.plot(x, pv[rows].mean(axis=0), label="pv (mean prediction)")
            ax.plot(x, tv[rows].mean(axis=0), label="tv (mean truth)", linestyle="--")
            if cell in curves:
                ax.plot(x, curves[cell][0], label="er", linewidth=0.9)
                ax.plot(x, curves[cell][1], label="st", linewidth=0.9)
            ax.set_title(f"{cell} ({len(rows)} test samples)")
            finish(fig, ax, f"plot_{cell}")
    for path in args.curves:
        rows = read_curves_csv(path)
        if not rows:
            raise UsageError(f"{path} holds no curves")
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for sid, vals in rows[:20]:
            ax.plot(np.arange(1, vals.size + 1) / (vals.size + 1), vals, label=str(sid), linewidth=0.8)
        ax.set_title(Path(path).stem)
        finish(fig, ax, f"curves_{Path(path).stem}")
    write_snapshot(args, out)
    print(f"wrote {len(made)} plot(s) to {out}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "dataset": cmd_dataset,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "plot": cmd_plot,
}


def _exit_code(exc) -> int:
    from .cnn import ConfigError, TrainingError
    from .dataset import DatasetError
    from .graph import GraphError
    from .netgen import GenerationError
    from .nn import ShapeError
    from .nn.checkpoint import CheckpointError

    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, DatasetError) and isinstance(exc.__cause__, OSError):
        return EXIT_IO
    if isinstance(exc, (TrainingError, FloatingPointError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (GraphError, GenerationError, DatasetError, ConfigError, ShapeError, CheckpointError, ValueError)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser, args = parse_args(argv)
    except UsageError as exc:
        print(f"ctrlrob: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ctrlrob: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    if args.version:
        print(f"ctrlrob {__version__} defaults {defaults_hash()}")
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # mapped to the documented exit codes
        code = _exit_code(exc)
        print(f"ctrlrob {args.command}: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
