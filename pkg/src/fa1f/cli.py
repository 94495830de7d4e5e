"""``fa1f-lab`` command line.

Usage: ``fa1f-lab SUBCOMMAND --config PATH [--seed U64] [--out DIR]
[--replicas N] [--threads N]``.  The subcommand overrides the config's
``kind``.  On failure a JSON object ``{"error": ..., "message": ...}`` goes
to stdout (and to ``error.json`` in the output directory) and the exit
status is nonzero: 2 for invalid input, 1 for anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

from .config import KINDS, ConfigError, ExperimentConfig, load_config
from .experiments import Report, run

EXIT_INVALID = 2
EXIT_FAILURE = 1


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _cell(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def write_report(report: Report, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, tab in report.tables.items():
        p = out / f"{name}.csv"
        with p.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(tab.header)
            for row in tab.rows:
                w.writerow([_cell(v) for v in row])
        written.append(p)
    for name, obj in report.summaries.items():
        p = out / f"{name}.json"
        p.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(p)
    for name, lines in report.json_lines.items():
        p = out / f"{name}.jsonl"
        p.write_text("".join(json.dumps(_clean(x), sort_keys=True) + "\n" for x in lines), encoding="utf-8")
        written.append(p)
    for name, text in report.texts.items():
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)
    return written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fa1f-lab", description="FA1f Harris-construction experiments")
    ap.add_argument("command", choices=KINDS)
    ap.add_argument("--config", type=Path, help="INI experiment config")
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the config)")
    ap.add_argument("--out", type=Path, help="output directory (overrides the config)")
    ap.add_argument("--replicas", type=int, help="replica count (overrides the config)")
    ap.add_argument("--threads", type=int, help="worker threads for compiled kernels")
    return ap


def _error(kind: str, message: str, out: Path | None, code: int) -> int:
    payload = json.dumps({"error": kind, "message": message}, sort_keys=True)
    print(payload)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(payload + "\n", encoding="utf-8")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig(kind=args.command)
        cfg = cfg.with_overrides(kind=args.command, seed=args.seed, replicas=args.replicas, threads=args.threads)
        out = out or Path(cfg.out_dir)
        cfg.validate()
    except (ConfigError, ValueError, TypeError) as exc:
        return _error(type(exc).__name__, str(exc), out, EXIT_INVALID)
    if cfg.threads is not None:
        import numba

        numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
    start = time.monotonic()
    try:
        report = run(cfg)
    except ValueError as exc:
        return _error(type(exc).__name__, str(exc), out, EXIT_INVALID)
    except Exception as exc:  # noqa: BLE001
        return _error(type(exc).__name__, str(exc), out, EXIT_FAILURE)
    paths = write_report(report, out)
    print(f"{cfg.kind}: wrote {len(paths)} files to {out} in {time.monotonic() - start:.1f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
