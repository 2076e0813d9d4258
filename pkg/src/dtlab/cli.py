"""Command-line client for the experiment runner.

A thin layer: parse arguments and an optional TOML config, build a
RunConfig, execute it (in-process by default, against a running service
with --server), and write the report.  Exit codes: 0 every check passed,
1 a check failed, 2 usage error, 3 numerical-precision error.  The
DTLAB_THREADS environment variable selects the replicate thread count for
Monte Carlo paths; unset means sequential.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .ensembles import estimates_to_csv
from .errors import PrecisionError, UsageError
from .runner import RunConfig, RunReport, execute, fisher_profile

LIST_KEYS = {"words", "t_grid", "cutout_k", "gammas"}
INT_KEYS = {"n", "reps", "max_len", "degree", "cutout_n", "kaplansky_dim",
            "kaplansky_pairs", "pencil_count", "pencil_max_dim",
            "point_spectrum_n", "per_decade", "seed"}
FLOAT_KEYS = {"bias_const", "t_min", "t_max"}
BOOL_KEYS = {"analytic_flag"}


def _coerce(key: str, value: str):
    if key in LIST_KEYS:
        items = [v for v in value.split(",") if v]
        return [int(v) for v in items] if key == "cutout_k" else items
    if key == "pairs":
        return [chunk.split(":") for chunk in value.split(",") if chunk]
    if key in INT_KEYS:
        return int(value)
    if key in FLOAT_KEYS:
        return float(value)
    if key in BOOL_KEYS:
        return value.lower() in ("1", "true", "yes")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtlab",
        description="Verification laboratory for DT-operator free probability")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--seed", type=int, help="64-bit unsigned master seed")
        p.add_argument("--out", type=Path, help="report output path")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--server", help="base URL of a running dtlab service")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="set any config key")

    p = sub.add_parser("verify", help="exact identity suites")
    p.add_argument("--suite", help="suite name (default all)")
    p.add_argument("--t", help="deformation parameter, rational p/q")
    p.add_argument("--csq", help="squared scale, rational p/q")
    common(p)

    p = sub.add_parser("moments", help="Monte Carlo *-moment estimates")
    p.add_argument("--mu", help="measure spec (delta:V | atomic:v:w,... | poly:TEXT | uniform)")
    p.add_argument("--c", help="scale, rational p/q")
    p.add_argument("--n", type=int, help="matrix dimension")
    p.add_argument("--reps", type=int, help="replicates")
    p.add_argument("--words", help="semicolon-separated *-words, e.g. 'ZZ*;ZZ'")
    common(p)

    p = sub.add_parser("fisher", help="Fisher information closed form")
    p.add_argument("--t", help="deformation parameter, rational p/q")
    p.add_argument("--csq", help="squared scale, rational p/q")
    p.add_argument("--profile-out", type=Path,
                   help="also export the scaled-Fisher profile CSV here")
    common(p)

    p = sub.add_parser("dimension", help="entropy-dimension recipe")
    p.add_argument("--csq", help="squared scale, rational p/q")
    p.add_argument("--analytic-flag", action="store_true", default=None,
                   help="supply the scalar-relative limsup = 0 analytic input")
    common(p)

    p = sub.add_parser("spectra", help="norm, cut-out, Kaplansky, pencil suites")
    p.add_argument("--n", type=int, help="dimension for the norm estimate")
    p.add_argument("--reps", type=int, help="replicates")
    common(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


_FLAG_KEYS = ("suite", "t", "csq", "mu", "c", "n", "reps", "words", "seed",
              "analytic_flag")


def build_config(args: argparse.Namespace) -> RunConfig:
    params: dict = {}
    if args.config:
        with open(args.config, "rb") as fh:
            loaded = tomllib.load(fh)
        command = loaded.pop("command", args.command)
        if command != args.command:
            raise UsageError(
                f"config file says command {command!r} but {args.command!r} was invoked")
        params.update(loaded)
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value.split(";") if key == "words" else value
    for item in args.overrides:
        if "=" not in item:
            raise UsageError(f"--set needs KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        params[key] = _coerce(key, value)
    return RunConfig(args.command, params)


def _run_remote(server: str, cfg: RunConfig) -> dict:
    import httpx

    url = server.rstrip("/") + "/" + cfg.command
    resp = httpx.post(url, json=cfg.parameters, timeout=3600.0)
    if resp.status_code == 400:
        raise UsageError(resp.json().get("detail", "bad request"))
    if resp.status_code == 422:
        raise PrecisionError(resp.json().get("detail", "precision error"))
    resp.raise_for_status()
    return resp.json()


def _emit(report_dict: dict, args: argparse.Namespace) -> int:
    report = RunReport(
        command=report_dict["command"], config=report_dict["config"],
        records=[_record_from(r) for r in report_dict["records"]],
        passed=report_dict["passed"],
        schema_version=report_dict["schema_version"],
        tool_version=report_dict["tool_version"],
        wall_clock_s=report_dict.get("wall_clock_s", 0.0),
        artifacts=report_dict.get("artifacts", {}))
    payload = (report.to_csv_text().encode() if args.format == "csv"
               else report.to_json_bytes())
    if args.out:
        args.out.write_bytes(payload)
        if report.command == "moments" and args.format == "json":
            _write_moment_csv(report, args.out)
    else:
        sys.stdout.buffer.write(payload)
    return 0 if report.passed else 1


def _record_from(r: dict):
    from .runner import Record
    return Record(**r)


def _write_moment_csv(report: RunReport, out: Path):
    from .ensembles import MomentEstimate
    estimates = [MomentEstimate(**e) for e in report.artifacts.get("estimates", [])]
    if estimates:
        estimates_to_csv(out.with_suffix(".csv"), estimates)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    try:
        cfg = build_config(args)
        if args.server:
            report_dict = _run_remote(args.server, cfg)
        else:
            report = execute(cfg)
            if args.command == "fisher" and getattr(args, "profile_out", None):
                fisher_profile(cfg).to_csv(args.profile_out)
            report_dict = report.to_dict()
        return _emit(report_dict, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except PrecisionError as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
