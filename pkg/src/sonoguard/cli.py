"""Batch command line interface.

Subcommands: ``gen-data`` materializes seeded phantom datasets, ``run``
executes a full experiment from a JSON config (with flag overrides), and
``report`` re-emits tables and figures from an existing results.json.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .harness import ExperimentConfig, load_results, run_experiment, write_reports
from .imgcore import GrayImage, write_gf32, write_png
from .model import RemoteError, generate_phantom
from .plots import render_plots
from .sigproc import RngStream

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

MODEL_URL_ENV = "SONOGUARD_MODEL_URL"


class CliConfigError(Exception):
    """Bad flags, bad config file, or invalid parameter combinations."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route that to the config path
    def error(self, message):
        raise CliConfigError(message)


def _parse_size(text: str) -> tuple:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise CliConfigError(f"size must look like 128x128, got {text!r}") from exc


def _build_parser() -> _Parser:
    parser = _Parser(prog="sonoguard", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="write a seeded phantom dataset")
    gen.add_argument("--seed", type=int, default=42)
    gen.add_argument("--count", type=int, default=31)
    gen.add_argument("--size", default="128x128", help="image dimensions, WxH")
    gen.add_argument("--out", required=True, help="output directory")
    gen.set_defaults(func=_cmd_gen_data)

    run = sub.add_parser("run", help="run a full experiment")
    run.add_argument("--config", help="JSON config file; flags override its values")
    run.add_argument("--seed", type=int)
    run.add_argument("--cases", type=int)
    run.add_argument("--size", help="image dimensions, WxH")
    run.add_argument("--iterations", type=int)
    run.add_argument("--population", type=int)
    run.add_argument("--budget", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--model-url", help=f"segmentation service URL (or env {MODEL_URL_ENV})")
    run.add_argument("--out", help="output directory")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="re-emit tables and figures from results.json")
    rep.add_argument("--results", required=True, help="path to results.json")
    rep.add_argument("--out", required=True, help="output directory")
    rep.set_defaults(func=_cmd_report)

    return parser


def _cmd_gen_data(args) -> int:
    width, height = _parse_size(args.size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    root = RngStream(args.seed)
    manifest = []
    for case in range(args.count):
        # same derivation as the run pipeline, so this materializes its inputs
        phantom = generate_phantom(root.child("case", case).child("phantom"), width, height)
        png = out / f"case_{case:03d}.png"
        gf32 = out / f"case_{case:03d}.gf32"
        truth = out / f"case_{case:03d}_truth.png"
        write_png(phantom.image, png)
        write_gf32(phantom.image, gf32)
        write_png(GrayImage(phantom.truth.data.astype(float)), truth)
        manifest.append(
            {
                "case": case,
                "image_png": png.name,
                "image_gf32": gf32.name,
                "truth_png": truth.name,
                "params": asdict(phantom.params),
            }
        )
    payload = {"seed": args.seed, "width": width, "height": height, "cases": manifest}
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {args.count} phantoms to {out}")
    return EXIT_OK


def _load_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError as exc:
            raise CliConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise CliConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise CliConfigError("config file must hold a JSON object")

    for key in ("seed", "cases", "iterations", "population", "budget", "workers", "out"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    if args.size is not None:
        raw["width"], raw["height"] = _parse_size(args.size)
    model = args.model_url or os.environ.get(MODEL_URL_ENV) or raw.get("model")
    if model is not None:
        raw["model"] = model

    try:
        return ExperimentConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise CliConfigError(str(exc)) from exc


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    result = run_experiment(cfg)
    if not result.records:
        print("runtime failure: every case failed; nothing to report", file=sys.stderr)
        return EXIT_RUNTIME
    written = write_reports(result, cfg.out)
    written.extend(render_plots(result, cfg.out))
    for path in written:
        print(f"wrote {path}")
    if result.failed_cases:
        print(f"{len(result.failed_cases)} case(s) failed and were excluded", file=sys.stderr)
    print(
        f"evaluated {cfg.cases - len(result.failed_cases)}/{cfg.cases} cases "
        f"in {result.elapsed_seconds:.1f}s"
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        result = load_results(args.results)
    except FileNotFoundError as exc:
        raise CliConfigError(f"results file not found: {args.results}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliConfigError(f"results file is malformed: {exc}") from exc
    written = write_reports(result, args.out)
    written.extend(render_plots(result, args.out))
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RemoteError, OSError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
