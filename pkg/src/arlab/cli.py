"""Command-line front end: train sweeps, evaluation, theory checks, reports.

Subcommands:
  train  --config <path>        run every (method, lambda, seed) cell
  eval   --weights --data --family   metrics for one saved model
  theory --weights --data --family   assumption checks and bound terms
  report <run dirs...>          merged comparison table (text, markdown, CSV)

Exit codes: 0 success, 2 config error, 3 artifact/format error, 4 when
every training cell failed.  The ARLAB_OUT environment variable, when
set, becomes the root under which relative output directories land.
Everything except recorded wall-clock durations is reproducible
byte-for-byte from the config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .datasets import LabeledImages, gen_minidigits, load_idx
from .errors import (
    ConfigError,
    DegenerateInputError,
    DivergenceError,
    FormatError,
    MergeError,
    ShapeError,
)
from .evaluation import (
    MetricsRow,
    evaluate,
    format_table,
    rows_from_csv,
    rows_to_csv,
    summary_csv,
)
from .model import load_weights, save_weights
from .theory import run_all_checks
from .training import DEFAULT_SEEDS, LrSchedule, TrainPlan, default_lambda_grid, train
from .transforms import FAMILY_NAMES, family_by_name

# method code -> (training mode, alignment kind); None kind means no penalty
METHOD_SPECS = {
    "B": ("baseline", None),
    "V": ("vanilla-aug", None),
    "VWA": ("vanilla-worst", None),
    "L": ("aligned-vertex", "l1"),
    "S": ("aligned-vertex", "sql2"),
    "C": ("aligned-vertex", "cos"),
    "K": ("aligned-vertex", "kl"),
    "W": ("aligned-vertex", "w1-exact"),
    "D": ("aligned-vertex", "disc"),
    "RVA": ("aligned-vertex", "sql2"),
    "RWA": ("aligned-worst", "sql2"),
}
PLAIN_METHODS = tuple(m for m, (_, kind) in METHOD_SPECS.items() if kind is None)

# fresh-draw offset for the held-out split when the config does not name one
EVAL_SEED_OFFSET = 10_000


class AllCellsFailed(RuntimeError):
    """Every sweep cell diverged; maps to exit code 4."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated form of the train-subcommand JSON document."""

    dataset: dict
    eval_dataset: Optional[dict]
    hidden: tuple
    family: str
    methods: tuple
    lambda_grid: tuple
    seeds: tuple
    epochs: int
    lr: LrSchedule
    batch_size: int
    output_dir: str


def _fail(field: str, why: str):
    raise ConfigError(f"{field}: {why}")


def _check_dataset(spec, field: str) -> dict:
    if not isinstance(spec, dict) or "kind" not in spec:
        _fail(field, "must be an object with a 'kind' key")
    if spec["kind"] == "minidigits":
        n = spec.get("n")
        if not isinstance(n, int) or n < 1:
            _fail(f"{field}.n", "must be a positive integer")
        if not isinstance(spec.get("seed", 0), int):
            _fail(f"{field}.seed", "must be an integer")
        size = spec.get("size", 16)
        if not isinstance(size, int) or size < 8:
            _fail(f"{field}.size", "must be an integer >= 8")
        return {"kind": "minidigits", "n": n, "seed": spec.get("seed", 0), "size": size}
    if spec["kind"] == "idx":
        for key in ("images", "labels"):
            if not isinstance(spec.get(key), str):
                _fail(f"{field}.{key}", "must be a path string")
        return {"kind": "idx", "images": spec["images"], "labels": spec["labels"]}
    _fail(f"{field}.kind", f"unknown kind {spec['kind']!r}; choose minidigits or idx")


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate the raw JSON document, field by field."""
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    dataset = _check_dataset(doc.get("dataset"), "dataset")
    eval_dataset = (_check_dataset(doc["eval_dataset"], "eval_dataset")
                    if "eval_dataset" in doc else None)

    model = doc.get("model", {})
    hidden = tuple(model.get("hidden", (64,)))
    if not hidden or any(not isinstance(w, int) or w < 1 for w in hidden):
        _fail("model.hidden", "must be a nonempty list of positive integers")

    family = doc.get("family")
    if family not in FAMILY_NAMES:
        _fail("family", f"must be one of {FAMILY_NAMES}")

    methods = doc.get("methods")
    if not isinstance(methods, list) or not methods:
        _fail("methods", "must be a nonempty list")
    for m in methods:
        if m not in METHOD_SPECS:
            _fail("methods", f"unknown method {m!r}; choose from {sorted(METHOD_SPECS)}")
    if len(set(methods)) != len(methods):
        _fail("methods", "duplicate entries")

    grid = doc.get("lambda_grid")
    if grid is None:
        grid = [float(x) for x in default_lambda_grid()]
    if not isinstance(grid, list) or not grid:
        _fail("lambda_grid", "must be a nonempty list")
    if any(not isinstance(x, (int, float)) or x <= 0 for x in grid):
        _fail("lambda_grid", "values must be positive numbers")

    seeds = doc.get("seeds", list(DEFAULT_SEEDS))
    if not isinstance(seeds, list) or not seeds or any(
            not isinstance(s, int) for s in seeds):
        _fail("seeds", "must be a nonempty list of integers")

    epochs = doc.get("epochs", 10)
    if not isinstance(epochs, int) or epochs < 1:
        _fail("epochs", "must be a positive integer")

    lr_doc = doc.get("lr", {})
    try:
        lr = LrSchedule(
            initial=float(lr_doc.get("initial", 0.1)),
            decay_factor=float(lr_doc.get("decay_factor", 1.0)),
            decay_every=int(lr_doc.get("decay_every", 1)),
        )
    except (ConfigError, TypeError, ValueError) as exc:
        _fail("lr", str(exc))

    batch_size = doc.get("batch_size", 128)
    if not isinstance(batch_size, int) or batch_size < 1:
        _fail("batch_size", "must be a positive integer")

    output_dir = doc.get("output_dir")
    if not isinstance(output_dir, str) or not output_dir:
        _fail("output_dir", "must be a nonempty path string")

    return ExperimentConfig(
        dataset=dataset, eval_dataset=eval_dataset, hidden=hidden,
        family=family, methods=tuple(methods),
        lambda_grid=tuple(float(x) for x in grid), seeds=tuple(seeds),
        epochs=epochs, lr=lr, batch_size=batch_size, output_dir=output_dir,
    )


def _load_dataset(spec: dict) -> LabeledImages:
    if spec["kind"] == "minidigits":
        return gen_minidigits(spec["n"], spec["seed"], spec["size"])
    return load_idx(spec["images"], spec["labels"])


def _eval_spec(config: ExperimentConfig) -> dict:
    """Held-out split: explicit, or a fresh minidigits draw, or the train set."""
    if config.eval_dataset is not None:
        return config.eval_dataset
    if config.dataset["kind"] == "minidigits":
        return {**config.dataset, "seed": config.dataset["seed"] + EVAL_SEED_OFFSET}
    return config.dataset


def resolve_output_dir(output_dir: str) -> Path:
    root = os.environ.get("ARLAB_OUT")
    path = Path(output_dir)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _cell_name(method: str, lam: Optional[float], seed: int) -> str:
    lam_part = "none" if lam is None else f"{lam:g}"
    return f"{method}_{lam_part}_{seed}"


def plan_for_cell(config: ExperimentConfig, method: str, lam: Optional[float],
                  seed: int, image_size: int) -> TrainPlan:
    mode, kind = METHOD_SPECS[method]
    return TrainPlan(
        mode=mode,
        family=family_by_name(config.family, image_size),
        lam=0.0 if lam is None else lam,
        align_kind=kind,
        epochs=config.epochs,
        lr=config.lr,
        batch_size=config.batch_size,
        seed=seed,
        hidden=config.hidden,
    )


def _run_cell(config: ExperimentConfig, method: str, lam: Optional[float],
              seed: int, out_root: str) -> dict:
    """Train one cell, save its weights, and report its metrics.

    Self-contained (rebuilds datasets from the config) so cells can run in
    worker processes; every source of randomness is seeded by the cell.
    """
    cell_dir = Path(out_root) / _cell_name(method, lam, seed)
    cell_dir.mkdir(parents=True, exist_ok=True)
    data = _load_dataset(config.dataset)
    hold_out = _load_dataset(_eval_spec(config))
    plan = plan_for_cell(config, method, lam, seed, data.images.shape[1])
    started = time.monotonic()
    record = {"method": method, "lambda": lam, "seed": seed, "mode": plan.mode,
              "align_kind": plan.align_kind, "dir": cell_dir.name}
    try:
        history = train(plan, data)
    except DivergenceError as exc:
        record["error"] = str(exc)
        record["duration_s"] = time.monotonic() - started
        (cell_dir / "run.json").write_text(json.dumps(record, indent=2, sort_keys=True))
        return record
    save_weights(history.model, cell_dir / "weights.bin")
    report = evaluate(history.model, hold_out, plan.family, seed)
    record["metrics"] = {
        "accuracy": report.accuracy,
        "robustness": report.robust_accuracy,
        "invariance": report.invariance,
    }
    record["final_loss"] = history.losses[-1]
    record["duration_s"] = time.monotonic() - started
    (cell_dir / "run.json").write_text(json.dumps(record, indent=2, sort_keys=True))
    return record


def _run_cell_packed(args) -> dict:
    return _run_cell(*args)


def _build_cells(config: ExperimentConfig) -> list:
    cells = []
    for method in config.methods:
        lams = ((None,) if method in PLAIN_METHODS else config.lambda_grid)
        for lam in lams:
            for seed in config.seeds:
                cells.append((method, lam, seed))
    return cells


def select_lambdas(rows: Sequence[MetricsRow]) -> dict:
    """Per method, the grid value with the best mean robustness over seeds.

    Ties go to the smaller lambda, matching the sweep's earlier-entry rule
    for an ascending grid.
    """
    by_method: dict = {}
    for r in rows:
        if r.lam is not None:
            by_method.setdefault(r.method, {}).setdefault(r.lam, []).append(r.robustness)
    out = {}
    for method, per_lam in by_method.items():
        scored = sorted(((float(np.mean(v)), -lam) for lam, v in per_lam.items()),
                        key=lambda t: (t[0], t[1]))
        out[method] = -scored[-1][1]
    return out


def table_rows(rows: Sequence[MetricsRow]) -> list:
    """Rows restricted, per AR method, to its selected lambda."""
    chosen = select_lambdas(rows)
    return [r for r in rows
            if r.lam is None or chosen.get(r.method) == r.lam]


def cmd_train(config_path: str, parallel: int = 1,
              seed_override: Optional[int] = None) -> Path:
    try:
        doc = json.loads(Path(config_path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {config_path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON: {exc}")
    config = parse_config(doc)
    if seed_override is not None:
        config = ExperimentConfig(**{**config.__dict__, "seeds": (seed_override,)})

    out = resolve_output_dir(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    snapshot = {
        "dataset": config.dataset, "eval_dataset": _eval_spec(config),
        "model": {"hidden": list(config.hidden)}, "family": config.family,
        "methods": list(config.methods),
        "lambda_grid": list(config.lambda_grid), "seeds": list(config.seeds),
        "epochs": config.epochs,
        "lr": {"initial": config.lr.initial, "decay_factor": config.lr.decay_factor,
               "decay_every": config.lr.decay_every},
        "batch_size": config.batch_size, "output_dir": config.output_dir,
    }
    (out / "config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True))

    cells = _build_cells(config)
    jobs = [(config, m, lam, s, str(out)) for m, lam, s in cells]
    started = time.monotonic()
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            records = list(pool.map(_run_cell_packed, jobs))
    else:
        records = [_run_cell_packed(job) for job in jobs]

    rows = []
    for (method, lam, seed), record in zip(cells, records):
        if "error" in record:
            print(f"cell {_cell_name(method, lam, seed)} failed: {record['error']}",
                  file=sys.stderr)
            continue
        m = record["metrics"]
        rows.append(MetricsRow(method, config.family, seed, lam,
                               m["accuracy"], m["robustness"], m["invariance"]))
    if not rows:
        raise AllCellsFailed(f"all {len(cells)} cells failed")

    (out / "metrics.csv").write_text(rows_to_csv(rows))
    shown = table_rows(rows)
    summary = format_table(shown, select_lambdas(rows))
    (out / "summary.txt").write_text(summary)
    (out / "run.json").write_text(json.dumps(
        {"cells": records, "duration_s": time.monotonic() - started},
        indent=2, sort_keys=True))
    print(summary, end="")
    print(out)
    return out


def _parse_data_arg(spec: str, fallback_size: int = 16) -> LabeledImages:
    """Dataset argument: 'minidigits:<n>:<seed>[:<size>]' or '<images>,<labels>'."""
    if spec.startswith("minidigits:"):
        parts = spec.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(
                f"data: expected minidigits:<n>:<seed>[:<size>], got {spec!r}")
        try:
            n, seed = int(parts[1]), int(parts[2])
            size = int(parts[3]) if len(parts) == 4 else fallback_size
        except ValueError:
            raise ConfigError(f"data: non-integer field in {spec!r}")
        return gen_minidigits(n, seed, size)
    if "," in spec:
        images, labels = spec.split(",", 1)
        return load_idx(images, labels)
    raise ConfigError(
        f"data: expected minidigits:<n>:<seed> or <images>,<labels>, got {spec!r}")


def cmd_eval(weights_path: str, data_spec: str, family_name: str,
             seed: int = 0, json_path: Optional[str] = None) -> dict:
    model = load_weights(weights_path)
    data = _parse_data_arg(data_spec)
    family = family_by_name(family_name, data.images.shape[1])
    report = evaluate(model, data, family, seed)
    doc = {
        "weights": str(weights_path), "family": family.family_name,
        "samples": len(data), "accuracy": report.accuracy,
        "robust_accuracy": report.robust_accuracy,
        "invariance": report.invariance,
        "per_class_invariance": list(report.per_class_invariance),
    }
    print(f"accuracy         {report.accuracy:.4f}")
    print(f"robust accuracy  {report.robust_accuracy:.4f}")
    print(f"invariance       {report.invariance:.4f}")
    _emit_json(doc, json_path)
    return doc


def cmd_theory(weights_path: str, data_spec: str, family_name: str,
               json_path: Optional[str] = None) -> dict:
    model = load_weights(weights_path)
    data = _parse_data_arg(data_spec)
    family = family_by_name(family_name, data.images.shape[1])
    doc = run_all_checks(model, data, family)
    for key in ("A2", "A3", "A6"):
        print(f"{key} fraction      {doc[key]['fraction']:.4f}")
    worst_gap = max(e["gap"] for e in doc["matching_identity"])
    print(f"largest W1 gap   {worst_gap:.6g}")
    print("phi              omitted")
    _emit_json(doc, json_path)
    return doc


def _emit_json(doc: dict, json_path: Optional[str]):
    text = json.dumps(doc, sort_keys=True)
    if json_path:
        Path(json_path).write_text(text)
    print(text)


def _load_run_dir(path: Path):
    try:
        rows = rows_from_csv((path / "metrics.csv").read_text())
        config = json.loads((path / "config.json").read_text())
    except OSError as exc:
        raise FormatError(f"run directory {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise FormatError(f"run directory {path}: bad config.json: {exc}")
    return rows, config


def cmd_report(run_dirs: Sequence[str], out_dir: Optional[str] = None):
    """Merge run directories into one comparison table.

    Runs may cover different shifts (each becomes its own block of rows),
    but two runs reporting the same shift must have evaluated on the same
    data to be comparable.
    """
    merged: list = []
    eval_spec_by_shift: dict = {}
    for d in run_dirs:
        rows, config = _load_run_dir(Path(d))
        shift = config.get("family")
        spec = json.dumps(config.get("eval_dataset"), sort_keys=True)
        if shift in eval_spec_by_shift and eval_spec_by_shift[shift] != spec:
            raise MergeError(
                f"run {d}: family {shift!r} already reported against a "
                f"different evaluation dataset")
        eval_spec_by_shift[shift] = spec
        merged.extend(rows)
    if not merged:
        raise MergeError("no metrics rows found in the given directories")

    chosen = select_lambdas(merged)
    shown = table_rows(merged)
    text = format_table(shown, chosen)
    markdown = _markdown_table(text)
    csv_text = summary_csv(shown)
    print(text, end="")
    print()
    print(markdown, end="")
    print()
    print(csv_text, end="")
    if out_dir:
        target = Path(out_dir)
        target.mkdir(parents=True, exist_ok=True)
        (target / "report.md").write_text(markdown)
        (target / "report.csv").write_text(csv_text)
    return markdown, csv_text


def _markdown_table(aligned: str) -> str:
    """Pipe-table rendering of the aligned text table."""
    lines = aligned.rstrip("\n").split("\n")
    cells = [line.split("  ") for line in lines]
    cells = [[c.strip() for c in row if c.strip()] for row in cells]
    header, body = cells[0], cells[2:]
    out = ["| " + " | ".join(header) + " |",
           "|" + "|".join([" --- "] * len(header)) + "|"]
    for row in body:
        out.append("| " + " | ".join(row) + " |")
    return "\n".join(out) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arlab",
        description="alignment-regularized augmentation workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the configured method sweep")
    p_train.add_argument("--config", required=True, help="JSON experiment config")
    p_train.add_argument("--parallel", type=int, default=1, metavar="N",
                         help="worker processes for sweep cells (default serial)")
    p_train.add_argument("--seed", type=int, default=None,
                         help="override the config's seed list with one seed")

    p_eval = sub.add_parser("eval", help="metrics for one saved model")
    p_eval.add_argument("--weights", required=True)
    p_eval.add_argument("--data", required=True,
                        help="minidigits:<n>:<seed>[:<size>] or <images>,<labels>")
    p_eval.add_argument("--family", required=True, choices=FAMILY_NAMES)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--json", default=None, metavar="PATH",
                        help="also write the JSON report here")

    p_theory = sub.add_parser("theory", help="assumption checks and bound terms")
    p_theory.add_argument("--weights", required=True)
    p_theory.add_argument("--data", required=True,
                          help="minidigits:<n>:<seed>[:<size>] or <images>,<labels>")
    p_theory.add_argument("--family", required=True, choices=FAMILY_NAMES)
    p_theory.add_argument("--json", default=None, metavar="PATH",
                          help="also write the JSON report here")

    p_report = sub.add_parser("report", help="merge runs into a comparison table")
    p_report.add_argument("run_dirs", nargs="+", metavar="DIR")
    p_report.add_argument("--out", default=None, metavar="DIR",
                          help="write report.md and report.csv here")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            cmd_train(args.config, parallel=args.parallel, seed_override=args.seed)
        elif args.command == "eval":
            cmd_eval(args.weights, args.data, args.family,
                     seed=args.seed, json_path=args.json)
        elif args.command == "theory":
            cmd_theory(args.weights, args.data, args.family, json_path=args.json)
        elif args.command == "report":
            cmd_report(args.run_dirs, out_dir=args.out)
    except (ConfigError, DegenerateInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, MergeError, ShapeError, OSError) as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 3
    except AllCellsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
