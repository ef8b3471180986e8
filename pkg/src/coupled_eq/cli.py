"""Config-driven experiment runner: BER sweeps, threshold searches, SIR.

One JSON config describes an experiment; the command verb picks the
mode. Every run writes records.csv (fixed columns), summary.json, and
config_echo.json into the output directory, with all defaults
materialized so the artifacts are self-describing.

BER points are simulated in fixed-size block batches. The RNG stream of
a block depends only on (seed, mode, snr index, block index), never on
worker count or execution order, so a parallel run reduces to exactly
the serial result and an interrupted run resumes from the recorded
block counts without changing any total. Timing fields are the one
exception to byte-for-byte reproducibility: they record wall clock.
"""

import argparse
import hashlib
import json
import os
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .channel import ebn0_to_sigma, standard_channel, transmit
from .densities import DeConfig, coupled_threshold, uncoupled_threshold
from .detectors import make_detector
from .encoder import Gf2Encoder
from .ensembles import (
    CODE_CATALOG,
    CoupledEnsembleSpec,
    DegreeDistribution,
    catalog,
    design_rate,
    parse_degree_file,
)
from .exitchart import area_threshold
from .graphs import peg_construct, sc_ldpc_construct
from .receiver import Schedule, turbo_equalize, window_decode
from .sir import sir_threshold

MODES = ("ber", "threshold-de", "threshold-area", "sir")
CSV_COLUMNS = ("snr_db", "blocks", "bit_errors", "block_errors", "ber", "bler", "seconds")
CHANNELS = ("ch1", "ch2", "ch3")
DETECTORS = ("bcjr", "lmmse")
# stopping decisions are aligned to this many blocks so that serial and
# parallel runs stop each SNR point at the same block count
BATCH_BLOCKS = 8

_SCHEDULE_DEFAULTS = {"inner_iters": 30, "outer_iters": 20, "window": 30}
_DE_DEFAULTS = {
    "population": 100_000,
    "block_len": 10_000,
    "inner_iters": 30,
    "max_rounds": 2000,
    "eps_err": 1e-5,
    "delta_db": 0.02,
    "cap": 50.0,
    "stall_window": 40,
    "stall_tol": 5e-3,
}
_AREA_DEFAULTS = {"samples_per_point": 200_000, "tol_db": 0.02, "grid_n": 1001}


class ConfigError(ValueError):
    """Config validation failure naming the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__("%s: %s" % (field, message))


def _require(cond, field, message):
    if not cond:
        raise ConfigError(field, message)


def _as_int(raw, field, minimum=None):
    if not isinstance(raw, int) or isinstance(raw, bool):
        raise ConfigError(field, "expected an integer, got %r" % (raw,))
    if minimum is not None and raw < minimum:
        raise ConfigError(field, "must be >= %d" % minimum)
    return raw


def _as_number(raw, field):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(field, "expected a number, got %r" % (raw,))
    return float(raw)


def _code_config(raw):
    code = raw.get("code")
    _require(isinstance(code, dict), "code", "expected an object")
    sources = [k for k in ("catalog", "degree_file", "coupled") if k in code]
    _require(
        len(sources) == 1,
        "code",
        "exactly one of catalog, degree_file, coupled required, got %r" % (sources,),
    )
    extra = set(code) - {"catalog", "degree_file", "coupled"}
    _require(not extra, "code", "unknown keys %r" % (sorted(extra),))
    src = sources[0]
    if src == "catalog":
        name = code["catalog"]
        _require(
            name in CODE_CATALOG,
            "code.catalog",
            "unknown entry %r; known: %s" % (name, ", ".join(sorted(CODE_CATALOG))),
        )
        return {"catalog": name}
    if src == "degree_file":
        path = code["degree_file"]
        _require(isinstance(path, str), "code.degree_file", "expected a path string")
        return {"degree_file": path}
    tup = code["coupled"]
    _require(isinstance(tup, dict), "code.coupled", "expected an object")
    out = {}
    for k in ("dv", "dc", "L", "m"):
        _require(k in tup, "code.coupled.%s" % k, "required")
        out[k] = _as_int(tup[k], "code.coupled.%s" % k, minimum=0)
    out["N"] = _as_int(tup["N"], "code.coupled.N", minimum=1) if "N" in tup else None
    extra = set(tup) - {"dv", "dc", "N", "L", "m"}
    _require(not extra, "code.coupled", "unknown keys %r" % (sorted(extra),))
    return {"coupled": out}


def materialize_config(raw, mode, seed=None, workers=None):
    """Validate a raw config dict and return a copy with every default filled.

    CLI overrides (seed, workers) take precedence over config values.
    Raises ConfigError naming the first offending field.
    """
    _require(isinstance(raw, dict), "config", "top level must be a JSON object")
    _require(mode in MODES, "mode", "unknown mode %r" % (mode,))
    if "mode" in raw and raw["mode"] != mode:
        raise ConfigError("mode", "config says %r but the verb is %r" % (raw["mode"], mode))

    common = {"mode", "channel", "seed", "workers"}
    per_mode = {
        "ber": {"code", "detector", "schedule", "snr_db", "block_len",
                "max_blocks", "min_bit_errors"},
        "threshold-de": {"code", "detector", "bracket", "de"},
        "threshold-area": {"code", "detector", "bracket", "area", "exit_cache"},
        "sir": {"rate", "n_sym", "bracket"},
    }
    for key in sorted(set(raw) - common - per_mode[mode]):
        raise ConfigError(key, "not a %s-mode field" % mode)

    cfg = {"mode": mode}
    _require("channel" in raw, "channel", "required")
    _require(raw["channel"] in CHANNELS, "channel", "expected one of %r" % (CHANNELS,))
    cfg["channel"] = raw["channel"]

    cfg["seed"] = seed if seed is not None else _as_int(raw.get("seed", 0), "seed")
    cfg["workers"] = (
        workers if workers is not None else _as_int(raw.get("workers", 1), "workers", 1)
    )

    if mode == "sir":
        cfg["rate"] = _as_number(raw.get("rate", 0.5), "rate")
        _require(0.0 < cfg["rate"] < 1.0, "rate", "must lie in (0, 1)")
        cfg["n_sym"] = _as_int(raw.get("n_sym", 1_000_000), "n_sym", 1000)
        bracket = raw.get("bracket", [-8.0, 8.0])
        cfg["bracket"] = _bracket(bracket)
        return cfg

    _require("detector" in raw, "detector", "required")
    _require(raw["detector"] in DETECTORS, "detector", "expected one of %r" % (DETECTORS,))
    cfg["detector"] = raw["detector"]
    cfg["code"] = _code_config(raw)

    if mode == "ber":
        snrs = raw.get("snr_db")
        _require(
            isinstance(snrs, (list, tuple)) and len(snrs) > 0,
            "snr_db",
            "non-empty list required in ber mode",
        )
        cfg["snr_db"] = [_as_number(s, "snr_db[%d]" % i) for i, s in enumerate(snrs)]
        cfg["max_blocks"] = _as_int(raw.get("max_blocks", 1000), "max_blocks", 1)
        cfg["min_bit_errors"] = _as_int(raw.get("min_bit_errors", 100), "min_bit_errors", 1)
        sched = dict(_SCHEDULE_DEFAULTS)
        user = raw.get("schedule", {})
        _require(isinstance(user, dict), "schedule", "expected an object")
        bad = set(user) - set(sched)
        _require(not bad, "schedule", "unknown keys %r" % (sorted(bad),))
        for k, v in user.items():
            sched[k] = _as_int(v, "schedule.%s" % k, 1)
        cfg["schedule"] = sched
        if "coupled" in cfg["code"]:
            c = cfg["code"]["coupled"]
            _require(c["N"] is not None, "code.coupled.N", "required in ber mode")
            _require(sched["window"] > c["m"], "schedule.window", "need window > m")
        else:
            _require("block_len" in raw, "block_len", "required for uncoupled ber")
            cfg["block_len"] = _as_int(raw["block_len"], "block_len", 10)
        return cfg

    # threshold-de and threshold-area share the bracket field
    _require("bracket" in raw, "bracket", "required")
    cfg["bracket"] = _bracket(raw["bracket"])
    if mode == "threshold-de":
        de = dict(_DE_DEFAULTS)
        user = raw.get("de", {})
        _require(isinstance(user, dict), "de", "expected an object")
        bad = set(user) - set(de)
        _require(not bad, "de", "unknown keys %r" % (sorted(bad),))
        de.update(user)
        if "coupled" in cfg["code"]:
            c = cfg["code"]["coupled"]
            de["chain_len"] = c["L"]
            de["coupling"] = c["m"]
        else:
            de["chain_len"] = 1
            de["coupling"] = 0
        cfg["de"] = de
        return cfg

    _require(
        "coupled" not in cfg["code"],
        "code.coupled",
        "area analysis works on uncoupled ensembles",
    )
    area = dict(_AREA_DEFAULTS)
    user = raw.get("area", {})
    _require(isinstance(user, dict), "area", "expected an object")
    bad = set(user) - set(area)
    _require(not bad, "area", "unknown keys %r" % (sorted(bad),))
    area.update(user)
    cfg["area"] = area
    cfg["exit_cache"] = raw.get("exit_cache")
    return cfg


def _bracket(val):
    _require(
        isinstance(val, (list, tuple)) and len(val) == 2,
        "bracket",
        "expected [lo_db, hi_db]",
    )
    lo = _as_number(val[0], "bracket[0]")
    hi = _as_number(val[1], "bracket[1]")
    _require(lo < hi, "bracket", "need lo < hi")
    return [lo, hi]


def config_hash(cfg):
    """Hash of the result-determining fields (workers excluded)."""
    stable = {k: v for k, v in cfg.items() if k != "workers"}
    blob = json.dumps(stable, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def block_rng(seed, mode, snr_idx, block_idx):
    """Independent RNG stream for one simulated block.

    Derived from (seed, mode, snr index, block index) alone so a block's
    realization never depends on scheduling.
    """
    tag = zlib.crc32(mode.encode())
    ss = np.random.SeedSequence([int(seed), tag, int(snr_idx), int(block_idx)])
    return np.random.default_rng(ss)


def _resolve_dd(code, base_dir="."):
    if "catalog" in code:
        return catalog(code["catalog"])
    path = code["degree_file"]
    if not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("code.degree_file", str(exc))
    try:
        return parse_degree_file(text).normalized()
    except ValueError as exc:
        raise ConfigError("code.degree_file", str(exc))


# module global so forked pool workers inherit the built context
_CTX = None


def _run_block(task):
    snr_idx, block_idx = task
    ctx = _CTX
    rng = block_rng(ctx["seed"], "ber", snr_idx, block_idx)
    enc = ctx["encoder"]
    u = rng.integers(0, 2, size=enc.k, dtype=np.uint8)
    v = enc.encode(u)
    y, _ = transmit(v, ctx["channel"], ctx["sigmas"][snr_idx], rng)
    if ctx["layout"] is None:
        hard, _ = turbo_equalize(
            y, ctx["graph"], ctx["detector"], ctx["sigmas"][snr_idx], ctx["schedule"]
        )
    else:
        hard, _ = window_decode(
            y, ctx["graph"], ctx["layout"], ctx["detector"], ctx["sigmas"][snr_idx],
            ctx["schedule"],
        )
    wrong = int(np.sum(hard[enc.info_cols] != v[enc.info_cols]))
    return wrong


def _build_ber_context(cfg):
    ch = standard_channel(cfg["channel"])
    detector = make_detector(cfg["detector"], ch)
    gseed = int(
        np.random.SeedSequence([cfg["seed"], zlib.crc32(b"graph")]).generate_state(1)[0]
    )
    sched = cfg["schedule"]
    if "coupled" in cfg["code"]:
        c = cfg["code"]["coupled"]
        spec = CoupledEnsembleSpec(dv=c["dv"], dc=c["dc"], N=c["N"], L=c["L"], m=c["m"])
        graph, layout = sc_ldpc_construct(spec, seed=gseed)
        rate = 1.0 - spec.dv / spec.dc
        schedule = Schedule(
            inner_iters=sched["inner_iters"],
            outer_iters=sched["outer_iters"],
            window=sched["window"],
        )
    else:
        dd = _resolve_dd(cfg["code"])
        n = cfg["block_len"]
        graph = peg_construct(dd, n, seed=gseed)
        layout = None
        rate = design_rate(dd)
        schedule = Schedule(
            inner_iters=sched["inner_iters"], outer_iters=sched["outer_iters"]
        )
    enc = Gf2Encoder(graph)
    # Eb/N0 maps through the ensemble design rate, matching the density
    # evolution convention; the realized k/n lands in the summary
    sigmas = [ebn0_to_sigma(s, rate) for s in cfg["snr_db"]]
    return {
        "seed": cfg["seed"],
        "channel": ch,
        "detector": detector,
        "graph": graph,
        "layout": layout,
        "encoder": enc,
        "schedule": schedule,
        "sigmas": sigmas,
        "design_rate": rate,
    }


def _format_row(row):
    return "%.10g,%d,%d,%d,%.10g,%.10g,%.3f\n" % (
        row["snr_db"], row["blocks"], row["bit_errors"], row["block_errors"],
        row["ber"], row["bler"], row["seconds"],
    )


class _Outputs:
    """Single-writer persistence for one run directory."""

    def __init__(self, out_dir, cfg, resume):
        self.dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.records = os.path.join(out_dir, "records.csv")
        self.summary = os.path.join(out_dir, "summary.json")
        self.echo = os.path.join(out_dir, "config_echo.json")
        self.progress = os.path.join(out_dir, "progress.json")
        self.hash = config_hash(cfg)
        self.rows = []
        self.partial = {}
        if resume and os.path.exists(self.echo):
            with open(self.echo) as fh:
                prior = json.load(fh)
            if prior.get("config_hash") != self.hash:
                diff = sorted(
                    k
                    for k in set(prior) | set(cfg)
                    if k not in ("config_hash", "workers")
                    and prior.get(k) != cfg.get(k)
                )
                raise SystemExit(
                    "refusing to resume: config hash %s != recorded %s (differs in: %s)"
                    % (self.hash, prior.get("config_hash"), ", ".join(diff) or "?")
                )
            if os.path.exists(self.records):
                with open(self.records) as fh:
                    lines = fh.read().splitlines()
                for line in lines[1:]:
                    f = line.split(",")
                    self.rows.append(
                        {
                            "snr_db": float(f[0]), "blocks": int(f[1]),
                            "bit_errors": int(f[2]), "block_errors": int(f[3]),
                            "ber": float(f[4]), "bler": float(f[5]),
                            "seconds": float(f[6]),
                        }
                    )
            if os.path.exists(self.progress):
                with open(self.progress) as fh:
                    self.partial = {int(k): v for k, v in json.load(fh).items()}
        else:
            for path in (self.records, self.summary, self.progress):
                if os.path.exists(path):
                    os.remove(path)
        with open(self.echo, "w") as fh:
            json.dump({**cfg, "config_hash": self.hash}, fh, indent=1, sort_keys=True)
            fh.write("\n")
        if not os.path.exists(self.records):
            with open(self.records, "w") as fh:
                fh.write(",".join(CSV_COLUMNS) + "\n")

    def append_row(self, row):
        self.rows.append(row)
        with open(self.records, "a") as fh:
            fh.write(_format_row(row))

    def flush_progress(self, snr_idx, state):
        self.partial[snr_idx] = state
        tmp = self.progress + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self.partial, fh)
        os.replace(tmp, self.progress)

    def write_summary(self, payload):
        tmp = self.summary + ".tmp"
        with open(tmp, "w") as fh:
            json.dump({**payload, "config_hash": self.hash}, fh, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, self.summary)


def _run_ber(cfg, out):
    global _CTX
    t_start = time.time()
    ctx = _build_ber_context(cfg)
    _CTX = ctx
    enc = ctx["encoder"]
    points = []
    done = len(out.rows)
    pool = None
    if cfg["workers"] > 1:
        pool = ProcessPoolExecutor(max_workers=cfg["workers"])
    try:
        for snr_idx, snr in enumerate(cfg["snr_db"]):
            if snr_idx < done:
                prior = out.rows[snr_idx]
                points.append(
                    {**prior, "censored": prior["bit_errors"] < cfg["min_bit_errors"]}
                )
                continue
            state = out.partial.get(
                snr_idx,
                {"blocks": 0, "bit_errors": 0, "block_errors": 0, "seconds": 0.0},
            )
            while state["blocks"] < cfg["max_blocks"] and (
                state["bit_errors"] < cfg["min_bit_errors"]
            ):
                n_batch = min(BATCH_BLOCKS, cfg["max_blocks"] - state["blocks"])
                tasks = [
                    (snr_idx, state["blocks"] + j) for j in range(n_batch)
                ]
                t0 = time.time()
                if pool is None:
                    errs = [_run_block(t) for t in tasks]
                else:
                    errs = list(pool.map(_run_block, tasks))
                state["seconds"] += time.time() - t0
                state["blocks"] += n_batch
                state["bit_errors"] += int(sum(errs))
                state["block_errors"] += int(sum(1 for e in errs if e))
                out.flush_progress(snr_idx, state)
            info_bits = state["blocks"] * enc.k
            row = {
                "snr_db": snr,
                "blocks": state["blocks"],
                "bit_errors": state["bit_errors"],
                "block_errors": state["block_errors"],
                "ber": state["bit_errors"] / info_bits,
                "bler": state["block_errors"] / state["blocks"],
                "seconds": round(state["seconds"], 3),
            }
            out.append_row(row)
            points.append(
                {**row, "censored": state["bit_errors"] < cfg["min_bit_errors"]}
            )
            out.write_summary(_ber_summary(cfg, ctx, points, t_start, False))
    finally:
        if pool is not None:
            pool.shutdown()
        _CTX = None
    out.write_summary(_ber_summary(cfg, ctx, points, t_start, True))


def _ber_summary(cfg, ctx, points, t_start, complete):
    enc = ctx["encoder"]
    return {
        "mode": "ber",
        "complete": complete,
        "points": points,
        "design_rate": ctx["design_rate"],
        "code_rate": enc.rate,
        "info_bits_per_block": enc.k,
        "block_bits": ctx["graph"].n,
        "elapsed_seconds": round(time.time() - t_start, 3),
        "workers": cfg["workers"],
    }


def _run_threshold_de(cfg, out):
    t0 = time.time()
    ch = standard_channel(cfg["channel"])
    detector = make_detector(cfg["detector"], ch)
    de = cfg["de"]
    de_cfg = DeConfig(**de)
    if "coupled" in cfg["code"]:
        c = cfg["code"]["coupled"]
        dd = DegreeDistribution.regular(c["dv"], c["dc"])
        res = coupled_threshold(
            dd, ch, detector, de_cfg, cfg["bracket"][0], cfg["bracket"][1],
            seed=cfg["seed"],
        )
    else:
        dd = _resolve_dd(cfg["code"])
        res = uncoupled_threshold(
            dd, ch, detector, de_cfg, cfg["bracket"][0], cfg["bracket"][1],
            seed=cfg["seed"],
        )
    out.write_summary(
        {
            "mode": "threshold-de",
            "result": res,
            "elapsed_seconds": round(time.time() - t0, 3),
        }
    )


def _run_threshold_area(cfg, out):
    t0 = time.time()
    ch = standard_channel(cfg["channel"])
    dd = _resolve_dd(cfg["code"])
    cache = cfg.get("exit_cache") or os.environ.get("COUPLED_EQ_EXIT_CACHE")
    res = area_threshold(
        dd,
        ch,
        cfg["detector"],
        cfg["bracket"][0],
        cfg["bracket"][1],
        tol_db=cfg["area"]["tol_db"],
        grid_n=cfg["area"]["grid_n"],
        samples_per_point=cfg["area"]["samples_per_point"],
        seed=cfg["seed"],
        cache_dir=cache,
    )
    out.write_summary(
        {
            "mode": "threshold-area",
            "result": res,
            "elapsed_seconds": round(time.time() - t0, 3),
        }
    )


def _run_sir(cfg, out):
    t0 = time.time()
    ch = standard_channel(cfg["channel"])
    res = sir_threshold(
        ch,
        cfg["rate"],
        n_sym=cfg["n_sym"],
        seed=cfg["seed"],
        lo_ezn0_db=cfg["bracket"][0],
        hi_ezn0_db=cfg["bracket"][1],
    )
    out.write_summary(
        {
            "mode": "sir",
            "result": res,
            "elapsed_seconds": round(time.time() - t0, 3),
        }
    )


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="coupled-eq",
        description="Joint equalization and LDPC decoding experiments.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--workers", type=int, default=None, help="worker processes")
        p.add_argument("--resume", action="store_true", help="continue a partial run")
        p.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print("config error: config: %s" % exc, file=sys.stderr)
        return 2
    try:
        cfg = materialize_config(raw, args.mode, seed=args.seed, workers=args.workers)
        out = _Outputs(args.out, cfg, args.resume)
        runner = {
            "ber": _run_ber,
            "threshold-de": _run_threshold_de,
            "threshold-area": _run_threshold_area,
            "sir": _run_sir,
        }[args.mode]
        runner(cfg, out)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
