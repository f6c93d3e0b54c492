"""Command-line entry point, flat config files and result serialization.

Config files are plain ``key = value`` lines; ``#`` starts a comment.  Any
key left out takes its default from :class:`ScenarioConfig`.

Exit codes: 0 success, 2 invalid configuration, 3 too many degenerate
drops, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .access import PhaseMode, modes_for
from .campaign import (CampaignResult, DegenerateCampaignError, draw_drop, drop_stream,
                       evaluate_drop, run_campaign)
from .reflect import (alternating_optimize, beam_for_reflection, brute_force_discrete,
                      quantize_phases)
from .scenario import SCHEMES, ConfigError, ScenarioConfig

log = logging.getLogger("irs_access")

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4

_DEFAULTS = ScenarioConfig()


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _split(text):
    return [p.strip() for p in text.replace(";", ",").split(",") if p.strip()]


def coerce(key, text):
    """Convert the textual value of ``key`` to the type of its default."""
    if key not in ScenarioConfig.field_names():
        raise ConfigError(key, "unknown key")
    default = getattr(_DEFAULTS, key)
    try:
        if key == "aided_user":
            return None if text.strip().lower() in ("", "none", "auto") else int(text)
        if isinstance(default, bool):
            return _parse_bool(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if key in ("bs_position", "irs_position"):
            return tuple(float(p) for p in _split(text))
        if key == "phase_bits":
            return tuple(int(p) for p in _split(text))
        if key == "schemes":
            return tuple(p.lower() for p in _split(text))
    except ValueError as exc:
        raise ConfigError(key, f"bad value {text!r} ({exc})") from None
    raise ConfigError(key, "unsupported key type")


def parse_pairs(lines, source="<config>"):
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected key = value, got {raw.strip()!r}")
        key, text = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, text)
    return values


def parse_config(path=None, overrides=()) -> ScenarioConfig:
    """Defaults, then the file at ``path`` (if any), then ``key=value`` overrides."""
    values = {}
    if path is not None:
        text = Path(path).read_text()
        values.update(parse_pairs(text.splitlines(), str(path)))
    values.update(parse_pairs(overrides, "--set"))
    return ScenarioConfig(**values)


def _format_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(config: ScenarioConfig):
    """Canonical text form; parsing it back yields an equal config."""
    return "".join(f"{f.name} = {_format_value(getattr(config, f.name))}\n"
                   for f in fields(config))


def config_digest(config: ScenarioConfig):
    return hashlib.sha256(dump_config(config).encode()).hexdigest()


@dataclass
class RunManifest:
    config_digest: str
    tool_version: str
    started_at: str
    finished_at: str
    degenerate_drop_count: int


def _timestamp():
    # honour SOURCE_DATE_EPOCH so repeated runs can be byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (datetime.fromtimestamp(int(epoch), timezone.utc) if epoch
           else datetime.now(timezone.utc))
    return now.isoformat(timespec="seconds")


def _sig9(x):
    return float(f"{x:.9g}")


def records_csv_text(result: CampaignResult):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["drop", "scheme", "phase_mode", "bits", "sum_rate_bps_hz"])
    for r in result.records:
        w.writerow([r.drop_index, r.scheme, r.phase_mode,
                    "" if r.bits is None else r.bits, f"{r.sum_rate:.9g}"])
    return buf.getvalue()


def write_records_csv(result: CampaignResult, path):
    try:
        Path(path).write_text(records_csv_text(result))
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc


def summary_dict(result: CampaignResult, manifest: RunManifest | None = None):
    out = {}
    scheme_order = [s for s in SCHEMES if s in result.schemes]
    mode_order = sorted(result.modes, key=PhaseMode.sort_key)
    for s in scheme_order:
        out[s] = {}
        for m in mode_order:
            summ = result.summaries.get((s, m.label))
            if summ is not None:
                out[s][m.label] = {"mean": _sig9(summ.mean), "p5": _sig9(summ.p5),
                                   "p50": _sig9(summ.p50)}
    if manifest is not None:
        out["manifest"] = asdict(manifest)
    return out


def write_summary_json(result: CampaignResult, manifest: RunManifest, path):
    try:
        Path(path).write_text(json.dumps(summary_dict(result, manifest), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc}") from exc


def _resolve(args):
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"master_seed={args.seed}")
    if getattr(args, "drops", None) is not None:
        overrides.append(f"drops={args.drops}")
    if getattr(args, "schemes", None):
        overrides.append(f"schemes={args.schemes}")
    config = parse_config(args.config, overrides)
    modes = None
    if getattr(args, "modes", None):
        try:
            modes = [PhaseMode.parse(m) for m in _split(args.modes)]
        except ValueError as exc:
            raise ConfigError("modes", str(exc)) from None
    return config, modes


def cmd_run(args):
    config, modes = _resolve(args)
    out_dir = Path(args.out_dir)
    started = _timestamp()
    result = run_campaign(config, parallel=args.parallel, modes=modes)
    manifest = RunManifest(config_digest(config), __version__, started, _timestamp(),
                           result.degenerate_drops)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.txt").write_text(dump_config(config))
    except OSError as exc:
        raise OSError(f"cannot prepare output directory {out_dir}: {exc}") from exc
    write_records_csv(result, out_dir / "records.csv")
    write_summary_json(result, manifest, out_dir / "summary.json")
    for s in result.schemes:
        line = "  ".join(f"{m.label}={result.p5(s, m.label):.2f}" for m in result.modes)
        print(f"{s:5s} p5  {line}")
    return EXIT_OK


def cmd_drop(args):
    config, modes = _resolve(args)
    config = replace(config, drops=max(config.drops, args.index + 1))
    rng = drop_stream(config.master_seed, args.index)
    placement, gains, channels, random_refl = draw_drop(config, rng)
    results = evaluate_drop(config, channels, random_refl, modes or modes_for(config))
    dump = {
        "drop": args.index,
        "users": [{"class": c, "x": float(p[0]), "y": float(p[1]),
                   "sigma_f2_db": float(10 * np.log10(gains.sigma_f2[k])),
                   "sigma_g2_db": float(10 * np.log10(gains.sigma_g2[k]))}
                  for k, (c, p) in enumerate(zip(placement.user_class,
                                                 placement.user_positions))],
        "sigma_h2_db": float(10 * np.log10(gains.sigma_h2)),
        "noise_power_w": gains.noise_power,
        "results": [asdict(r) for r in results],
    }
    print(json.dumps(dump, indent=2))
    return EXIT_OK


def oracle_report(n_instances, n_elements, n_antennas, bits, seed, iterations=3):
    """Compare quantized alternating optimization with exhaustive search.

    Channels are i.i.d. CN(0, 1).  Returns one dict per bit width.
    """
    rows = []
    for b in bits:
        rng = np.random.default_rng([seed, b])
        ratios = []
        for _ in range(n_instances):
            g = (rng.standard_normal(n_elements) + 1j * rng.standard_normal(n_elements)) / np.sqrt(2)
            H = (rng.standard_normal((n_elements, n_antennas))
                 + 1j * rng.standard_normal((n_elements, n_antennas))) / np.sqrt(2)
            f = (rng.standard_normal(n_antennas) + 1j * rng.standard_normal(n_antennas)) / np.sqrt(2)
            cont = alternating_optimize(g, H, f, iterations)
            heur = beam_for_reflection(g, H, f, quantize_phases(cont.reflection, b))
            best = brute_force_discrete(g, H, f, b)
            ratios.append(heur.objective / best.objective)
        ratios = np.array(ratios)
        rows.append({"bits": b, "instances": n_instances,
                     "mean_ratio": float(ratios.mean()), "min_ratio": float(ratios.min()),
                     "optimal_fraction": float(np.mean(ratios >= 1 - 1e-12))})
    return rows


def cmd_oracle(args):
    rows = oracle_report(args.instances, args.elements, args.antennas, args.bits, args.seed)
    print("bits  instances  mean(heur/opt)  min(heur/opt)  optimal")
    for r in rows:
        print(f"{r['bits']:4d}  {r['instances']:9d}  {r['mean_ratio']:14.6f}  "
              f"{r['min_ratio']:13.6f}  {r['optimal_fraction']:7.1%}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="irs-access",
                                description="IRS-aided multi-user MIMO multiple-access simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--schemes", help="comma list of tdma,fdma,noma")
        sp.add_argument("--modes", help="comma list, e.g. continuous,discrete_1,discrete_2,random")

    run = sub.add_parser("run", help="run a Monte Carlo campaign")
    common(run)
    run.add_argument("--drops", type=int)
    run.add_argument("--out-dir", default="results")
    run.add_argument("--parallel", type=int, default=1, metavar="N")
    run.set_defaults(func=cmd_run)

    drop = sub.add_parser("drop", help="dump a single drop as JSON")
    common(drop)
    drop.add_argument("--index", type=int, default=0)
    drop.set_defaults(func=cmd_drop)

    orc = sub.add_parser("oracle", help="small-N exhaustive search vs. quantized heuristic")
    orc.add_argument("--instances", type=int, default=100)
    orc.add_argument("--elements", type=int, default=5)
    orc.add_argument("--antennas", type=int, default=2)
    orc.add_argument("--bits", type=int, nargs="+", default=[1, 2])
    orc.add_argument("--seed", type=int, default=0)
    orc.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateCampaignError as exc:
        print(f"degenerate campaign: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # e.g. oracle budget exceeded
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
