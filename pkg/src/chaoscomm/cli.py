"""Command-line harness: ``chaoscomm simulate | sweep | compare-filters``.

Every command writes its outputs atomically into ``--out`` together with a
``manifest`` file. The manifest uses the same flat ``key=value`` syntax as
``--config`` files, so ``--config <dir>/manifest`` reruns a scenario exactly.

Exit codes: 0 success, 2 usage or configuration error, 3 divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import math
import os
import sys
from pathlib import Path

from . import __version__
from ._jit import BACKEND
from .channel import NoiseSpec, Placement
from .codec import FILTERS, FilterId, get_filter
from .link import (
    DEFAULT_PLACEMENT,
    SWEEP_COLUMNS,
    Circuit,
    LinkConfig,
    run_link,
    summarize_sweep,
    sweep_noise,
)
from .oscillators import ChuaParams, SimulationDiverged
from .signals import MessageSpec, _atomic_write_text, write_trace_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGED = 3


class ConfigError(ValueError):
    pass


class BadValue(argparse.ArgumentTypeError, ValueError):
    """Raised by value parsers; argparse prints its message verbatim."""


def _parser(fn):
    def parse(text):
        try:
            return fn(text)
        except BadValue:
            raise
        except (ValueError, TypeError) as exc:
            raise BadValue(f"{text!r}: {exc}") from None
    parse.__name__ = fn.__name__
    return parse


@_parser
def _floats(text: str) -> tuple:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    out = tuple(float(p) for p in parts)
    if not all(math.isfinite(v) for v in out):
        raise ValueError("non-finite value")
    return out


@_parser
def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite value")
    return v


@_parser
def _u64(text: str) -> int:
    v = int(str(text), 0)
    if not 0 <= v < 2**64:
        raise ValueError("must be an unsigned 64-bit integer")
    return v


@_parser
def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be at least 1")
    return v


def _choice(*valid):
    def parse(text: str) -> str:
        t = str(text).strip().lower()
        if t not in valid:
            raise BadValue(f"invalid value {text!r}; valid choices: {', '.join(valid)}")
        return t
    return parse


# config keys and their parsers; CLI flag --foo-bar maps to key foo_bar
KEYS = {
    "circuit": _choice(*(c.value for c in Circuit)),
    "noise_pct": _finite,
    "noise_target": _choice(*(p.value for p in Placement)),
    "filter": _choice(*(f.value for f in FilterId)),
    "kappa": _finite,
    "vo": _finite,
    "dt": _finite,
    "duration": _finite,
    "settle": _finite,
    "seed": _u64,
    "repeats": _positive_int,
    "amplitudes": _floats,
    "message_hz": _finite,
    "pot_fraction": _finite,
    "tx_initial": _floats,
    "rx_initial": _floats,
}
# written into manifests, accepted and ignored on reload
META_KEYS = ("command", "version", "backend", "timestamp", "outputs")


def load_config(path) -> dict:
    """Parse a flat ``key=value`` file (``#`` comments, blank lines allowed)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, _, value = (s.strip() for s in line.partition("="))
        if key in META_KEYS:
            continue
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return values


def merge_settings(args: argparse.Namespace) -> dict:
    """Config file values overlaid by any flag given on the command line."""
    settings = load_config(args.config) if args.config else {}
    for key in KEYS:
        v = getattr(args, key, None)
        if v is not None:
            settings[key] = v
    return settings


def build_config(settings: dict) -> LinkConfig:
    circuit = Circuit.parse(settings.get("circuit", "a"))
    target = settings.get("noise_target")
    placement = Placement(target) if target else DEFAULT_PLACEMENT[circuit]
    seed = settings.get("seed", 0)
    codec = None
    if "kappa" in settings or "vo" in settings:
        base = LinkConfig(circuit).resolved().codec
        codec = dataclasses.replace(
            base, kappa=settings.get("kappa", base.kappa), Vo=settings.get("vo", base.Vo)
        )
    params = None
    if "pot_fraction" in settings:
        if circuit is not Circuit.B:
            raise ConfigError("pot_fraction only applies to circuit b")
        params = ChuaParams(pot_fraction=settings["pot_fraction"])
    msg = MessageSpec(frequency=settings["message_hz"]) if "message_hz" in settings else MessageSpec()
    return LinkConfig(
        circuit=circuit,
        message=msg,
        codec=codec,
        filter=get_filter(settings["filter"]) if "filter" in settings else None,
        noise=NoiseSpec(settings.get("noise_pct", 0.0), placement, seed),
        dt=settings.get("dt"),
        duration=settings.get("duration", 0.02),
        tx_initial=settings.get("tx_initial"),
        rx_initial=settings.get("rx_initial"),
        seed=seed,
        params=params,
        settle=settings.get("settle"),
    )


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def manifest_entries(cfg: LinkConfig) -> dict:
    """Flat, fully resolved description of ``cfg`` in config-file keys."""
    cfg = cfg.resolved()
    out = {
        "circuit": cfg.circuit.value,
        "noise_pct": float(cfg.noise.amplitude_percent),
        "noise_target": cfg.noise.placement.value,
        "filter": cfg.filter.id.value,
        "kappa": float(cfg.codec.kappa),
        "vo": float(cfg.codec.Vo),
        "dt": float(cfg.dt),
        "duration": float(cfg.duration),
        "settle": float(cfg.settle),
        "seed": int(cfg.seed),
        "message_hz": float(cfg.message.frequency),
        "tx_initial": cfg.tx_initial,
        "rx_initial": cfg.rx_initial,
    }
    if cfg.circuit is Circuit.B:
        out["pot_fraction"] = float(cfg.params.pot_fraction)
    return out


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for reproducible builds
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        t = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        t = _dt.datetime.now(tz=_dt.timezone.utc)
    return t.replace(microsecond=0).isoformat()


def write_manifest(out_dir: Path, command: str, entries: dict, outputs) -> Path:
    lines = [f"command={command}", f"version={__version__}", f"backend={BACKEND}", f"timestamp={_timestamp()}"]
    lines += [f"{k}={_fmt(v)}" for k, v in entries.items()]
    lines.append("outputs=" + ",".join(outputs))
    path = out_dir / "manifest"
    _atomic_write_text(path, lambda fh: fh.write("\n".join(lines) + "\n"))
    return path


def write_rows_csv(path: Path, columns, rows) -> None:
    def _write(fh):
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")
    _atomic_write_text(path, _write)


REPORT_COLUMNS = ("circuit", "ber", "ber_polarity_agnostic", "sync_rms", "correlation",
                  "antisync", "alignment_lag", "glitches", "n_bits")


def cmd_simulate(args) -> int:
    cfg = build_config(merge_settings(args))
    out = Path(args.out)
    result = run_link(cfg)
    rep = result.report.as_dict()
    rep["circuit"] = result.config.circuit.value
    write_trace_csv(result.all_traces(), out / "traces.csv")
    write_rows_csv(out / "report.csv", REPORT_COLUMNS, [rep])
    write_manifest(out, "simulate", manifest_entries(cfg), ["traces.csv", "report.csv"])
    for k in REPORT_COLUMNS[1:]:
        print(f"{k}={_fmt(rep[k])}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    settings = merge_settings(args)
    amps = settings.get("amplitudes")
    if not amps:
        raise ConfigError("sweep needs --amplitudes (comma-separated percentages)")
    if any(a < 0 or a > 100 for a in amps):
        raise ConfigError("noise amplitudes must lie in [0, 100] %")
    repeats = settings.get("repeats", 1)
    cfg = build_config(settings)
    rows = sweep_noise(cfg, amps, repeats)
    out = Path(args.out)
    write_rows_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    outputs = ["sweep.csv"]
    for s in _gnuplot_groups(summarize_sweep(rows)):
        name, lines = s
        _atomic_write_text(out / name, lambda fh, lines=lines: fh.write("\n".join(lines) + "\n"))
        outputs.append(name)
    entries = manifest_entries(cfg)
    entries.pop("noise_pct")
    entries.pop("tx_initial")  # each repeat draws its own initial conditions
    entries.pop("rx_initial")
    entries["amplitudes"] = tuple(amps)
    entries["repeats"] = repeats
    write_manifest(out, "sweep", entries, outputs)
    failed = sum(1 for r in rows if r["error"])
    print(f"rows={len(rows)} failed={failed} out={out}")
    return EXIT_OK


def _gnuplot_groups(summary):
    groups: dict = {}
    for s in summary:
        groups.setdefault((s["circuit"], s["placement"]), []).append(s)
    for (circuit, placement), items in groups.items():
        lines = [f"# circuit={circuit} placement={placement}", "# amplitude_pct mean_ber"]
        lines += [f"{_fmt(s['amplitude_pct'])} {_fmt(s['ber_mean'])}" for s in items]
        yield f"ber_{circuit}_{placement}.dat", lines


FILTER_ORDER = (FilterId.NONE, FilterId.FILTER1, FilterId.FILTER2, FilterId.FILTER3)
FILTER_COLUMNS = ("filter", "glitches", "ber", "ber_polarity_agnostic", "alignment_lag")


def cmd_compare_filters(args) -> int:
    settings = merge_settings(args)
    if settings.get("circuit", "a") != "a" and not args.any_circuit:
        raise ConfigError("filter comparison is defined for circuit a; pass --any-circuit to override")
    base = build_config(settings)
    rows = []
    for fid in FILTER_ORDER:
        res = run_link(dataclasses.replace(base, filter=FILTERS[fid]))
        r = res.report
        rows.append({"filter": fid.value, "glitches": r.glitches, "ber": r.ber,
                     "ber_polarity_agnostic": r.ber_polarity_agnostic, "alignment_lag": r.alignment_lag})
    out = Path(args.out)
    write_rows_csv(out / "filters.csv", FILTER_COLUMNS, rows)
    entries = manifest_entries(base)
    entries.pop("filter")
    write_manifest(out, "compare-filters", entries, ["filters.csv"])
    print(f"{'filter':>6} {'glitches':>8} {'ber':>8} {'lag_us':>8}")
    for r in rows:
        print(f"{r['filter']:>6} {r['glitches']:>8d} {r['ber']:>8.4f} {r['alignment_lag'] * 1e6:>8.3f}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, default_out: str):
    # every option defaults to None so config-file values survive unless overridden
    p.add_argument("--config", help="flat key=value file; flags override its values")
    p.add_argument("--circuit", type=KEYS["circuit"], help="a, b, ca or cb")
    p.add_argument("--noise-pct", dest="noise_pct", type=KEYS["noise_pct"], help="noise amplitude A in percent")
    p.add_argument("--noise-target", dest="noise_target", type=KEYS["noise_target"],
                   help="sync, info, both (circuits b/ca/cb) or shared (circuit a)")
    p.add_argument("--filter", type=KEYS["filter"], help="receiver filter 1, 2, 3 or none")
    p.add_argument("--kappa", type=_finite, help="output pot ratio in (0, 1]")
    p.add_argument("--vo", type=_finite, help="comparator reference voltage")
    p.add_argument("--dt", type=_finite, help="integration step in seconds")
    p.add_argument("--duration", type=_finite, help="simulated time in seconds")
    p.add_argument("--settle", type=_finite, help="seconds excluded from the metrics")
    p.add_argument("--seed", type=_u64, help="unsigned 64-bit seed")
    p.add_argument("--pot-fraction", dest="pot_fraction", type=_finite, help="circuit b pot setting in [0, 1)")
    p.add_argument("--out", default=default_out, help=f"output directory (default {default_out})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaoscomm", description="Chaotic masking link simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one link and write traces, report and manifest")
    _add_common(p, "run")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="BER against noise amplitude over seeded repeats")
    _add_common(p, "sweep")
    p.add_argument("--amplitudes", type=_floats, help="comma-separated noise percentages")
    p.add_argument("--repeats", type=_positive_int, help="repeats per amplitude (default 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-filters", help="same scenario under no filter and filters 1-3")
    _add_common(p, "filters")
    p.add_argument("--any-circuit", action="store_true", help="allow circuits other than a")
    p.set_defaults(func=cmd_compare_filters)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SimulationDiverged as exc:
        print(f"chaoscomm: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, ValueError) as exc:
        print(f"chaoscomm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"chaoscomm: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
