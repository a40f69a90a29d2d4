"""Command-line entry point: ``keybuf <command> [options]``.

Commands: ``capacity``, ``simulate``, ``fading``, ``audit``, ``waterfill``.
Exit status is 0 on success, 1 on a bad flag or config, 2 when an exact
computation is refused for exceeding its enumeration budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .channels import WiretapChannel, main_capacity, make_erasure_pair, make_flip_pair, secrecy_capacity
from .leakage_audit import AuditScenario, JointLeakageReport, joint_leakage_exhaustive, negative_control
from .power_control import (FadingConfig, FadingDistribution, ergodic_main_rate, no_csi_secrecy_rate,
                            simulate_fading_session, water_fill)
from .scheme import SchemeConfig, SessionReport, run_session
from .wiretap_code import EnumerationBudgetError

log = logging.getLogger("keybuf")

SESSION_COLUMNS = ["slot", "rate", "delivered_bits", "errors", "B_k", "pushed", "taken", "dropped", "oldest_origin"]
FADING_COLUMNS = SESSION_COLUMNS + ["H", "G", "P"]


class ConfigError(Exception):
    """Bad command line or configuration file (exit status 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def fmt_float(x: float) -> str:
    return f"{x:.12g}"


def _round_floats(obj):
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        return float(fmt_float(float(obj)))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(_round_floats(obj), separators=(",", ":"))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return fmt_float(float(value))
    return str(int(value))


def session_csv(report: SessionReport) -> str:
    columns = FADING_COLUMNS if report.kind == "fading" else SESSION_COLUMNS
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in report.records:
        writer.writerow([_cell(getattr(r, c)) for c in columns])
    return buf.getvalue()


def _report_payload(report) -> dict:
    if isinstance(report, SessionReport):
        columns = FADING_COLUMNS if report.kind == "fading" else SESSION_COLUMNS
        return {"summary": report.summary(),
                "records": [{c: getattr(r, c) for c in columns} for r in report.records]}
    if isinstance(report, JointLeakageReport):
        return report.to_dict()
    return dict(report)


def emit_report(report, fmt: str = "json", path=None) -> str:
    """Serialise ``report`` as CSV or JSON; write to ``path`` or return the text."""
    if fmt == "csv":
        if not isinstance(report, SessionReport):
            raise ConfigError("csv output is only defined for session traces")
        text = session_csv(report)
    elif fmt == "json":
        text = to_json(_report_payload(report)) + "\n"
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return text


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _seeds(args, cfg) -> list[int]:
    seeds = args.seed if args.seed else ([cfg["seed"]] if "seed" in cfg else [])
    if not seeds:
        raise ConfigError("a --seed (or a \"seed\" config key) is required for stochastic commands")
    return [int(s) for s in seeds]


def _slots(args, cfg) -> int:
    slots = args.slots if args.slots is not None else cfg.get("slots")
    if slots is None or int(slots) < 0:
        raise ConfigError("--slots (or a \"slots\" config key) must be a non-negative integer")
    return int(slots)


def _simulate_one(kind: str, cfg: dict, slots: int, seed: int, fmt: str) -> str:
    rng = np.random.default_rng(seed)
    if kind == "simulate":
        report = run_session(SchemeConfig.from_dict(cfg), slots, rng)
    else:
        report = simulate_fading_session(FadingConfig.from_dict(cfg), slots, rng)
    return emit_report(report, fmt)


def _write(text: str, out, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    log.info("wrote %s", out / name)


def _run_sessions(kind: str, args) -> int:
    cfg = _load_config(args.config)
    seeds, slots = _seeds(args, cfg), _slots(args, cfg)
    try:
        # validate once in this process so config errors map to exit status 1
        SchemeConfig.from_dict(cfg) if kind == "simulate" else FadingConfig.from_dict(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad {kind} config: {exc}") from exc
    jobs = [(kind, cfg, slots, s, args.format) for s in seeds]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            texts = list(pool.map(_simulate_one, *zip(*jobs)))
    else:
        texts = [_simulate_one(*job) for job in jobs]
    if args.out is None and len(texts) > 1:
        raise ConfigError("several seeds need --out")
    for seed, text in zip(seeds, texts):
        _write(text, args.out, f"{kind}_seed{seed}.{args.format}")
    return 0


def cmd_capacity(args) -> int:
    cfg = _load_config(args.config)
    spec = dict(cfg.get("channel", cfg))
    if args.channel is not None:
        spec["kind"] = args.channel
    for key in ("eps1", "eps2", "p1", "p2"):
        if getattr(args, key) is not None:
            spec[key] = getattr(args, key)
    try:
        kind = spec.get("kind")
        if kind == "erasure":
            ch = make_erasure_pair(float(spec["eps1"]), float(spec["eps2"]))
        elif kind == "flip":
            ch = make_flip_pair(float(spec["p1"]), float(spec["p2"]))
        else:
            ch = WiretapChannel.from_dict(spec)
        result = {"C": main_capacity(ch), "Cs": secrecy_capacity(ch)}
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad channel: {exc}") from exc
    _write(to_json(result) + "\n", args.out, "capacity.json")
    return 0


def cmd_simulate(args) -> int:
    return _run_sessions("simulate", args)


def cmd_fading(args) -> int:
    return _run_sessions("fading", args)


def cmd_audit(args) -> int:
    path = args.scenario or args.config
    if path is None:
        raise ConfigError("audit needs --scenario")
    try:
        scn = AuditScenario.from_dict(_load_config(path))
        if args.negative_control:
            scn = negative_control(scn)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario: {exc}") from exc
    report = joint_leakage_exhaustive(scn)
    _write(emit_report(report, "json"), args.out, "audit.json")
    return 0


def cmd_waterfill(args) -> int:
    cfg = _load_config(args.config)
    dist_spec = dict(cfg.get("dist", {"kind": "rayleigh"}))
    if args.dist is not None:
        dist_spec = {"kind": args.dist}
    if args.mean_h is not None:
        dist_spec["meanH"] = args.mean_h
    if args.mean_g is not None:
        dist_spec["meanG"] = args.mean_g
    p_bar = args.p_bar if args.p_bar is not None else float(cfg.get("P_bar", 1.0))
    s1 = args.sigma1_sq if args.sigma1_sq is not None else float(cfg.get("sigma1_sq", 1.0))
    s2 = args.sigma2_sq if args.sigma2_sq is not None else float(cfg.get("sigma2_sq", 1.0))
    try:
        dist = FadingDistribution.from_dict(dist_spec)
        policy = water_fill(dist, p_bar, s1)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad fading config: {exc}") from exc
    result = {
        "lambda": policy.lam, "water_level": policy.water_level, "avg_power": policy.avg_power,
        "ergodic_rate": ergodic_main_rate(policy, dist), "no_csi_rate": no_csi_secrecy_rate(policy, dist, s1, s2),
    }
    _write(to_json(result) + "\n", args.out, "waterfill.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="keybuf", description="Key-buffer wiretap coding simulator and leakage auditor.",
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, stochastic=False):
        p.add_argument("--config", default=None, help="JSON config file; flags override its values")
        p.add_argument("--out", default=None, help="output directory (created if absent); stdout when omitted")
        if stochastic:
            p.add_argument("--seed", type=int, action="append", default=None,
                           help="random seed; repeat for several independent runs")
            p.add_argument("--slots", type=int, default=None, help="number of slots to simulate")
            p.add_argument("--jobs", type=int, default=1, help="worker processes across seeds")
            p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")

    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = sub.add_parser("capacity", help="main and secrecy capacity of a discrete channel pair", formatter_class=fmt)
    common(p)
    p.add_argument("--channel", choices=("erasure", "flip"), default=None, help="channel family")
    p.add_argument("--eps1", type=float, default=None, help="Bob erasure probability")
    p.add_argument("--eps2", type=float, default=None, help="Eve erasure probability")
    p.add_argument("--p1", type=float, default=None, help="Bob flip probability")
    p.add_argument("--p2", type=float, default=None, help="Eve flip probability")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("simulate", help="static-channel key-buffer session trace", formatter_class=fmt)
    common(p, stochastic=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fading", help="slow-fading key-buffer session trace", formatter_class=fmt)
    common(p, stochastic=True)
    p.set_defaults(func=cmd_fading)

    p = sub.add_parser("audit", help="exact joint leakage of a small scenario", formatter_class=fmt)
    common(p)
    p.add_argument("--scenario", default=None, help="scenario JSON file")
    p.add_argument("--negative-control", action="store_true", help="reuse keys in the last keyed slot")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("waterfill", help="water-filling policy and ergodic rates", formatter_class=fmt)
    common(p)
    p.add_argument("--dist", choices=("rayleigh",), default=None, help="fading family")
    p.add_argument("--mean-h", type=float, default=None, help="mean main-channel power gain")
    p.add_argument("--mean-g", type=float, default=None, help="mean eavesdropper power gain")
    p.add_argument("--p-bar", type=float, default=None, help="average power constraint")
    p.add_argument("--sigma1-sq", type=float, default=None, help="main-channel noise variance")
    p.add_argument("--sigma2-sq", type=float, default=None, help="eavesdropper noise variance")
    p.set_defaults(func=cmd_waterfill)
    return parser


def run(argv=None) -> int:
    level = getattr(logging, os.environ.get("KEYBUF_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 1
    except EnumerationBudgetError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
