"""Command-line front end: ``verify``, ``simulate``, ``chsh`` and ``scan``.

Exit status: 0 pass, 1 a scientific gate failed, 2 invalid configuration.

Parameters resolve as built-in defaults < ``--config`` file < explicit flags.
The config file is either flat ``key = value`` text (keys as the long flag
names with underscores, plus the SimConfig field names) or a ``manifest.json``
written by an earlier run, which replays that run exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .model import LEFT_CHART, Settings, corrupted_left_chart
from .quantum import all_events_correlation, postselected_correlation, table_correlations
from .simulator import (
    ConfigError,
    SimConfig,
    coincidence_sort,
    generate_stream,
    run_chsh,
    summarize,
    write_events,
)
from .verifier import (
    DEFAULT_MAX_SUBPANELS,
    DEFAULT_ORDER,
    QuadratureError,
    joint_table_numeric,
    mc_correlation,
    psi_grid,
    verify_charts,
)

EXIT_OK, EXIT_GATE, EXIT_CONFIG = 0, 1, 2

STANDARD_ANGLES = "0,pi/2,-pi/4,pi/4"

_ANGLE_RE = re.compile(r"^([+-]?)(\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?$")


def parse_angle(text: Any) -> float:
    """Radians, or a pi-fraction literal such as ``pi/4``, ``-3pi/4``, ``2*pi``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower()
    m = _ANGLE_RE.match(s)
    if m is None:
        return float(s)
    sign, num, den = m.groups()
    value = (float(num) if num else 1.0) * math.pi / (float(den) if den else 1.0)
    return -value if sign == "-" else value


def parse_angles(text: Any) -> list[float]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    out = [parse_angle(x) for x in items]
    if len(out) != 4:
        raise ValueError(f"expected four angles (a, a', b, b'), got {len(out)}")
    return out


def _bool(x: Any) -> bool:
    if isinstance(x, bool):
        return x
    s = str(x).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {x!r}")


def _int(x: Any) -> int:
    if isinstance(x, int):
        return x
    value = float(x)
    if value != int(value):
        raise ValueError(f"not an integer: {x!r}")
    return int(value)


CONVERTERS = {
    "n": _int,
    "seed": _int,
    "phi1": parse_angle,
    "phi2": parse_angle,
    "psi": parse_angle,
    "remove_right": _bool,
    "angles": parse_angles,
    "grid": _int,
    "tolerance": float,
    "quad_order": _int,
    "max_subpanels": _int,
    "corrupt": _bool,
    "psi_start": parse_angle,
    "psi_stop": parse_angle,
    "steps": _int,
    "delta_t_arm": float,
    "t_coh": float,
    "mean_interval": float,
    "transit": float,
    "coincidence_window": float,
}

_SIM = SimConfig.__dataclass_fields__
SIM_KEYS = ("delta_t_arm", "t_coh", "mean_interval", "transit", "coincidence_window")

DEFAULTS: dict[str, dict[str, Any]] = {
    "verify": {
        "grid": 33,
        "tolerance": 1e-8,
        "quad_order": DEFAULT_ORDER,
        "max_subpanels": DEFAULT_MAX_SUBPANELS,
        "corrupt": False,
    },
    "simulate": {
        "n": _SIM["n_pairs"].default,
        "seed": 0,
        "phi1": 0.0,
        "phi2": 0.0,
        "remove_right": False,
        **{k: _SIM[k].default for k in SIM_KEYS},
    },
    "chsh": {
        "n": _SIM["n_pairs"].default,
        "seed": 0,
        "angles": parse_angles(STANDARD_ANGLES),
        **{k: _SIM[k].default for k in SIM_KEYS},
    },
    "scan": {
        "n": 10**5,
        "seed": 0,
        "psi_start": 0.0,
        "psi_stop": 2 * math.pi,
        "steps": 32,
        "tolerance": 1e-8,
    },
}


def read_config(path: Path) -> dict[str, Any]:
    """Load flat key-value text or a run manifest into raw parameter values."""
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return dict(doc.get("parameters", doc))
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve(command: str, args: argparse.Namespace) -> dict[str, Any]:
    params = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        raw = read_config(Path(args.config))
        if "n_pairs" in raw:
            raw["n"] = raw.pop("n_pairs")
        if "psi" in raw and command == "simulate":
            raw.setdefault("phi1", raw["psi"])
            raw.setdefault("phi2", 0.0)
            raw.pop("psi")
        unknown = sorted(set(raw) - set(params))
        if unknown:
            raise ValueError(f"unknown {command} config keys: {', '.join(unknown)}")
        params.update(raw)
    for key in DEFAULTS[command]:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if command == "simulate" and getattr(args, "psi", None) is not None:
        params["phi1"], params["phi2"] = args.psi, 0.0
    return {k: CONVERTERS[k](v) for k, v in params.items()}


def sim_config(params: dict[str, Any]) -> SimConfig:
    return SimConfig(n_pairs=params["n"], seed=params["seed"], **{k: params[k] for k in SIM_KEYS})


def manifest(command: str, params: dict[str, Any], outputs: list[str]) -> dict[str, Any]:
    return {
        "command": command,
        "version": __version__,
        "seed": params.get("seed"),
        "parameters": params,
        "outputs": outputs,
    }


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _finish(out: Path, command: str, params: dict[str, Any], outputs: list[str]) -> dict[str, Any]:
    man = manifest(command, params, outputs)
    _write_json(out / "manifest.json", man)
    return man


def cmd_verify(params: dict[str, Any], out: Path) -> int:
    chart = corrupted_left_chart() if params["corrupt"] else LEFT_CHART
    man = _finish(out, "verify", params, ["verify.json", "verify.txt"])
    try:
        report = verify_charts(
            psi_grid(params["grid"]),
            params["tolerance"],
            left_chart=chart,
            order=params["quad_order"],
            max_subpanels=params["max_subpanels"],
        )
    except QuadratureError as exc:
        doc = {"manifest": man, "passed": False, "error": "non-convergence", "detail": str(exc)}
        _write_json(out / "verify.json", doc)
        (out / "verify.txt").write_text(f"chart verification: FAIL\n  {exc}\n", encoding="utf-8")
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_GATE
    _write_json(out / "verify.json", {"manifest": man, **report.to_dict()})
    text = report.to_text()
    (out / "verify.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    if not report.passed:
        psi, a, b, dev = report.worst
        print(f"offending entry: ({a}, {b}) at psi={psi!r}, deviation {dev:.3e}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_simulate(params: dict[str, Any], out: Path) -> int:
    config = sim_config(params)
    settings = Settings(params["phi1"], params["phi2"])
    man = _finish(out, "simulate", params, ["events.csv", "summary.json"])
    stream = generate_stream(config, settings, remove_right=params["remove_right"])
    tags = coincidence_sort(stream)
    with open(out / "events.csv", "w", encoding="utf-8", newline="") as fh:
        write_events(stream, fh, tags=tags, comment="manifest: manifest.json")
    summary = summarize(stream, tags)
    _write_json(out / "summary.json", {"manifest": man, **summary.to_dict()})
    print(
        f"simulated {config.n_pairs} pairs at psi={settings.psi:.6f}: "
        f"coincident fraction {summary.coincident_fraction:.5f}, "
        f"E_post {summary.postselected:+.5f} +/- {summary.postselected_se:.5f}, "
        f"E_all {summary.all_events:+.5f} +/- {summary.all_events_se:.5f}"
    )
    return EXIT_OK


def cmd_chsh(params: dict[str, Any], out: Path) -> int:
    config = sim_config(params)
    man = _finish(out, "chsh", params, ["chsh.json"])
    report = run_chsh(config, params["angles"])
    doc = {"manifest": man, **report.to_dict()}
    _write_json(out / "chsh.json", doc)
    print(
        f"postselected S = {report.postselected_s:.4f} +/- {report.postselected_se:.4f} "
        f"(oracle {report.oracle['postselected']:.4f})\n"
        f"all-events   S = {report.all_events_s:.4f} +/- {report.all_events_se:.4f} "
        f"(oracle {report.oracle['all_events']:.4f})"
    )
    # a local model can never push the unconditioned statistic past 2
    return EXIT_OK if report.all_events_s < 2.0 else EXIT_GATE


SCAN_HEADER = (
    "psi",
    "oracle",
    "lhv_numeric",
    "mc",
    "mc_se",
    "oracle_all_events",
    "lhv_numeric_all_events",
    "mc_all_events",
    "mc_all_events_se",
)


def cmd_scan(params: dict[str, Any], out: Path) -> int:
    man = _finish(out, "scan", params, ["scan.csv", "scan.json"])
    grid = np.linspace(params["psi_start"], params["psi_stop"], params["steps"] + 1)
    rows = []
    worst = 0.0
    for i, psi in enumerate(grid):
        s = Settings.from_psi(float(psi))
        table, _ = joint_table_numeric(s, target=min(1e-9, params["tolerance"] / 10))
        num_post, num_all = table_correlations(table)
        mc = mc_correlation(s, params["n"], params["seed"], run=i)
        oracle, oracle_all = postselected_correlation(s), all_events_correlation(s)
        worst = max(worst, abs(num_post - oracle), abs(num_all - oracle_all))
        rows.append(
            (float(psi), oracle, num_post, mc["postselected"], mc["postselected_se"],
             oracle_all, num_all, mc["all_events"], mc["all_events_se"])
        )
    with open(out / "scan.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("# manifest: manifest.json\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_HEADER)
        w.writerows([repr(v) for v in row] for row in rows)
    passed = worst < params["tolerance"]
    _write_json(
        out / "scan.json",
        {"manifest": man, "rows": len(rows), "max_numeric_deviation": worst, "passed": passed},
    )
    print(f"scan: {len(rows)} rows, max |numeric - oracle| = {worst:.3e} ({'PASS' if passed else 'FAIL'})")
    return EXIT_OK if passed else EXIT_GATE


COMMANDS = {"verify": cmd_verify, "simulate": cmd_simulate, "chsh": cmd_chsh, "scan": cmd_scan}


def _common(p: argparse.ArgumentParser, command: str) -> None:
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default runs/{command})")
    p.add_argument("--config", help="key=value file or manifest.json")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=_int, help="pairs (per setting / per scan point)")


def _sim_flags(p: argparse.ArgumentParser) -> None:
    for key in SIM_KEYS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=float, help="seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="franson-lhv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check charts against the quantum joint table")
    _common(p, "verify")
    p.add_argument("--grid", type=int, help="number of psi values on [0, 2pi] (default 33)")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--quad-order", type=int, help="Gauss-Legendre points per subpanel")
    p.add_argument("--max-subpanels", type=int, help="refinement budget per panel")
    p.add_argument("--corrupt", action="store_const", const=True, help="use the mid=1/4 mutant chart")

    p = sub.add_parser("simulate", help="generate a time-tagged event stream")
    _common(p, "simulate")
    p.add_argument("--psi", type=parse_angle, help="phase sum; sets phi1=psi, phi2=0")
    p.add_argument("--phi1", type=parse_angle)
    p.add_argument("--phi2", type=parse_angle)
    p.add_argument("--remove-right", action="store_const", const=True)
    _sim_flags(p)

    p = sub.add_parser("chsh", help="CHSH statistics from simulated runs")
    _common(p, "chsh")
    p.add_argument("--angles", type=parse_angles, help=f"a,a',b,b' (default {STANDARD_ANGLES})")
    _sim_flags(p)

    p = sub.add_parser("scan", help="correlation curve over a psi range")
    _common(p, "scan")
    p.add_argument("--psi-start", type=parse_angle)
    p.add_argument("--psi-stop", type=parse_angle)
    p.add_argument("--steps", type=int)
    p.add_argument("--tolerance", type=float)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out or Path("runs") / args.command
    try:
        params = resolve(args.command, args)
        if "tolerance" in params and not params["tolerance"] > 0:
            raise ValueError("tolerance > 0 required")
        if args.command == "scan" and params["steps"] < 2:
            raise ValueError("steps >= 2 violated")
        if args.command in ("simulate", "chsh"):
            sim_config(params)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[args.command](params, out)


if __name__ == "__main__":
    raise SystemExit(main())
