"""Command line entry point: ``z2glue <experiment> [options]``.

Exit status: 0 when every check passes or is skipped as under-resolved,
1 when a check fails, 2 for usage and configuration errors, 3 when a
numerical error aborts the experiment (the manifest records it).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
import traceback
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

from ..checks import FAIL
from ..errors import ConfigError, Z2GlueError
from .config import EXPERIMENTS, OUT_ENV, ExperimentConfig, load_config
from .experiments import RUNNERS, Outcome

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
MANIFEST = "manifest.json"


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def make_run_dir(root: Path, experiment: str) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    for i in range(10_000):
        d = root / f"{stamp}-{experiment}" if i == 0 else root / f"{stamp}-{experiment}-{i}"
        try:
            d.mkdir()
            return d
        except FileExistsError:
            continue
    raise RuntimeError(f"could not create a unique run directory under {root}")


def _cell(v) -> str:
    # repr keeps the full float so identical runs give identical bytes
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunRecord:
    manifest: dict
    run_dir: Path
    exit_code: int
    outcome: Outcome | None


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Run one experiment and persist its CSVs and manifest."""
    run_dir = make_run_dir(cfg.out_root, cfg.experiment)
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    manifest = {"experiment": cfg.experiment, "config": cfg.echo(), "config_source": dict(sorted(cfg.source.items())),
                "code_version": code_version(), "started": started}
    outcome = None
    try:
        outcome = RUNNERS[cfg.experiment](cfg)
    except Z2GlueError as exc:
        manifest.update(status="error", **{"pass": False}, checks=[], files={},
                        error={"type": type(exc).__name__, "message": str(exc),
                               "history": [float(x) for x in getattr(exc, "history", [])],
                               "traceback": traceback.format_exc()})
        code = EXIT_NUMERICAL
    else:
        files = {}
        for name, table in outcome.tables.items():
            path = run_dir / f"{name}.csv"
            write_csv(path, table.header, table.rows)
            files[path.name] = {"sha256": sha256(path), "rows": len(table.rows)}
        failed = any(c.status == FAIL for c in outcome.checks)
        manifest.update(
            status="fail" if failed else "pass", **{"pass": not failed}, files=files,
            checks=[{k: v for k, v in c.to_dict().items() if k != "seconds"} for c in outcome.checks],
            check_seconds={f"{c.criterion}:{c.name}": c.seconds for c in outcome.checks})
        code = EXIT_FAIL if failed else EXIT_OK
    manifest["wall_seconds"] = time.perf_counter() - t0
    with open(run_dir / MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunRecord(manifest, run_dir, code, outcome)


# keys that legitimately differ between otherwise identical runs
VOLATILE = ("started", "wall_seconds", "check_seconds")


def stable_view(manifest: dict) -> dict:
    return {k: v for k, v in manifest.items() if k not in VOLATILE}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="z2glue", description="Run a gluing experiment and record a manifest.",
                epilog=f"Output root: --out, else ${OUT_ENV}, else ./runs.")
    p.add_argument("experiment", help="one of: " + ", ".join(EXPERIMENTS))
    p.add_argument("--config", metavar="FILE", help="flat key = value parameter file")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                   help="override one parameter (repeatable)")
    p.add_argument("--out", metavar="DIR", help="output root directory")
    p.add_argument("--seed", metavar="N", help="random seed")
    p.add_argument("-q", "--quiet", action="store_true", help="print only the run directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None and not Path(args.config).is_file():
            raise ConfigError("--config", f"no such file {args.config!r}")
        cfg = load_config(args.experiment, args.config, args.sets, args.seed, args.out)
    except ConfigError as exc:
        print(f"z2glue: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rec = run_experiment(cfg)
    if not args.quiet:
        for c in rec.outcome.checks if rec.outcome else ():
            print(c.line())
        if "error" in rec.manifest:
            err = rec.manifest["error"]
            print(f"numerical error: {err['type']}: {err['message']}", file=sys.stderr)
        print(f"status: {rec.manifest['status']}")
    print(rec.run_dir)
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
