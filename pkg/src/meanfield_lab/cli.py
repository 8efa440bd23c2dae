"""Command line entry point: ``meanfield-lab run|list|w1``.

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid config or
input file, 3 capacity or numerical failure.
"""

import argparse
import csv
import datetime
import hashlib
import json
import os
import platform
import re
import sys
from importlib import resources
from importlib.metadata import PackageNotFoundError, version

import jsonschema

from .errors import CapacityError, DimensionError, NumericalBlowUpError, TransportSolverError
from .scenarios import RUNNERS, SCENARIOS
from .transport import read_point_cloud, w1_exact, write_plan

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def load_schema():
    return json.loads(resources.files("meanfield_lab").joinpath("config_schema.json").read_text())


def _line_of(text, err):
    """Best-effort source line of a schema error: the line of the offending key."""
    keys = [p for p in err.absolute_path if isinstance(p, str)]
    if err.validator == "additionalProperties":
        extra = re.findall(r"'([^']+)' was unexpected", err.message)
        keys += extra[:1]
    for key in reversed(keys):
        m = re.search(r'"%s"\s*:' % re.escape(key), text)
        if m:
            return text.count("\n", 0, m.start()) + 1
    return 1


class ConfigError(ValueError):
    pass


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}:1: cannot read config: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg} (column {exc.colno})") from None
    errors = sorted(jsonschema.Draft202012Validator(load_schema()).iter_errors(cfg),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for err in errors:
            where = "/".join(map(str, err.absolute_path)) or "<root>"
            lines.append(f"{path}:{_line_of(text, err)}: {where}: {err.message}")
        raise ConfigError("\n".join(lines))
    return cfg, hashlib.sha256(text.encode()).hexdigest()


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):
        return _fmt(v.item())
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for r in rows:
            out.writerow([_fmt(v) for v in r])


def _versions():
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "pot", "jsonschema"):
        try:
            out[pkg] = version(pkg)
        except PackageNotFoundError:
            out[pkg] = None
    return out


def run(config_path, output=None):
    try:
        cfg, digest = load_config(config_path)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    scenario = cfg["scenario"]
    outdir = output or cfg.get("output") or os.path.join("runs", scenario)
    try:
        result = RUNNERS[scenario](cfg)
    except (CapacityError, TransportSolverError) as exc:
        print(f"{scenario}: transport: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NumericalBlowUpError as exc:
        print(f"{scenario}: dynamics: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, DimensionError) as exc:
        print(f"{config_path}:1: {scenario}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(outdir, exist_ok=True)
    write_csv(os.path.join(outdir, "results.csv"), result.header, result.rows)
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        json.dump({"scenario": scenario, "pass": bool(result.passed), **result.report}, fh, indent=2)
        fh.write("\n")
    manifest = {
        "scenario": scenario,
        "config": os.path.abspath(config_path),
        "config_sha256": digest,
        "seed": cfg["seed"],
        "versions": _versions(),
        "threads": os.environ.get("MEANFIELD_THREADS"),
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": ["results.csv", "report.json"],
        "pass": bool(result.passed),
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"{scenario}: {'PASS' if result.passed else 'FAIL'} ({outdir})")
    return EXIT_OK if result.passed else EXIT_FAIL


def list_scenarios(stream=None):
    stream = stream or sys.stdout
    width = max(map(len, SCENARIOS))
    for name, what in SCENARIOS.items():
        print(f"{name:<{width}}  {what}", file=stream)
    return EXIT_OK


def w1_command(a, b, plan_path=None):
    try:
        mu, nu = read_point_cloud(a), read_point_cloud(b)
    except (OSError, ValueError, IndexError) as exc:
        print(f"w1: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        dist, plan = w1_exact(mu, nu)
    except DimensionError as exc:
        print(f"w1: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, TransportSolverError) as exc:
        print(f"w1: transport: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if plan_path:
        write_plan(plan_path, plan)
    print(repr(dist))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="meanfield-lab", description="Mean-field particle dynamics laboratory.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a JSON config")
    r.add_argument("config")
    r.add_argument("--output", help="output directory (overrides the config)")
    sub.add_parser("list", help="list scenarios and what they check")
    w = sub.add_parser("w1", help="exact W1 between two point-cloud CSVs (header weight,z1,...,zd)")
    w.add_argument("a")
    w.add_argument("b")
    w.add_argument("--plan", help="write the optimal plan to this CSV")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(args.config, args.output)
    if args.command == "list":
        return list_scenarios()
    return w1_command(args.a, args.b, args.plan)


if __name__ == "__main__":
    sys.exit(main())
