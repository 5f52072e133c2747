"""Command-line reports: delimited rate tables plus rendered figures.

Every mode reads one YAML config, writes one CSV (17 significant digits,
newline-terminated rows) and one PNG into the output directory, then a
run manifest with content hashes.  Identical config and seed produce
byte-identical CSVs regardless of worker count.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time

import numpy as np
import yaml

from . import plotting
from .atmosphere import TurbulenceScenario, beam_statistics, scenario_sigma_I2
from .channel import (
    ChannelModelKind,
    calibrate_sigma_I2,
    ensemble_statistics,
    sample_ensemble,
)
from .errors import ConfigError, NumericalError
from .keyrate import (
    NoiseParams,
    ProtocolParams,
    average_key_rate,
    key_rate,
    repeaterless_bound,
    repeaterless_bound_ensemble,
)
from .optimize import optimize_fixed, optimize_mean_based, optimize_per_sample
from .states import SCHEMES, SourceParams

MODES = (
    "fixed-rate",
    "optimal-fixed",
    "fading",
    "optimize-mean",
    "optimize-per-sample",
    "transmissivity-pdf",
)
RATE_COLUMNS = (
    "attenuation_db",
    "scheme",
    "N",
    "alpha2",
    "T_S",
    "rate",
    "rb",
    "success_prob",
    "n_samples",
    "seed",
)
PDF_COLUMNS = ("sigma_I2", "mean_attenuation_db", "bin_lo", "bin_hi", "count", "density")
_DEFAULT_SAMPLES = 1 << 20
_QUICK_SAMPLES = 1 << 16
_MAX_SAMPLES = 1 << 24

_FIXED_MODES = ("fixed-rate", "optimal-fixed")
_ENSEMBLE_MODES = ("fading", "optimize-mean", "optimize-per-sample", "transmissivity-pdf")


def _fail(path, message):
    raise ConfigError(f"{path}: {message}")


def _get_number(cfg, path, key, default=None, lo=None, hi=None, integer=False):
    value = cfg.get(key, default)
    if value is None:
        _fail(f"{path}{key}", "missing required value")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"{path}{key}", "must be a number")
    if integer and int(value) != value:
        _fail(f"{path}{key}", "must be an integer")
    if lo is not None and value < lo:
        _fail(f"{path}{key}", f"must be >= {lo}")
    if hi is not None and value > hi:
        _fail(f"{path}{key}", f"must be <= {hi}")
    return int(value) if integer else float(value)


def _get_section(cfg, key):
    section = cfg.get(key, {})
    if not isinstance(section, dict):
        _fail(key, "must be a mapping")
    return section


def _resolve_config(raw, mode, overrides):
    """Validate the raw YAML mapping and fold in CLI overrides."""
    if not isinstance(raw, dict):
        _fail("config", "top level must be a mapping")
    known = {
        "seed", "samples", "workers", "output_dir", "knots", "protocol", "source",
        "schemes", "n_list", "attenuation_db", "scenario", "turbulence", "model",
    }
    for key in raw:
        if key not in known:
            _fail(key, "unknown configuration key")
    out = {"mode": mode}

    seed = overrides.get("seed", raw.get("seed"))
    if seed is None:
        _fail("seed", "missing required value (config key or --seed; no wall-clock default)")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        _fail("seed", "must be an integer in [0, 2^64)")
    out["seed"] = seed

    samples = overrides.get("samples") or raw.get("samples", _DEFAULT_SAMPLES)
    if not isinstance(samples, int) or isinstance(samples, bool) or samples <= 0:
        _fail("samples", "must be a positive integer")
    if samples > _MAX_SAMPLES:
        _fail("samples", f"must be <= {_MAX_SAMPLES}")
    out["samples"] = samples

    workers = overrides.get("workers") or raw.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or not 1 <= workers <= 64:
        _fail("workers", "must be an integer in [1, 64]")
    out["workers"] = workers

    out["output_dir"] = overrides.get("out") or raw.get("output_dir", "satqkd-out")
    if not isinstance(out["output_dir"], str) or not out["output_dir"]:
        _fail("output_dir", "must be a non-empty string")

    out["knots"] = _get_number(raw, "", "knots", default=1024, lo=2, hi=4096, integer=True)

    proto = _get_section(raw, "protocol")
    for key in proto:
        if key not in ("epsilon", "nu", "eta_d", "eta_r"):
            _fail(f"protocol.{key}", "unknown key")
    out["protocol"] = {
        "epsilon": _get_number(proto, "protocol.", "epsilon", default=0.1, lo=0.0),
        "nu": _get_number(proto, "protocol.", "nu", default=1.1, lo=1.0),
        "eta_d": _get_number(proto, "protocol.", "eta_d", default=0.68, lo=1e-9, hi=1.0),
        "eta_r": _get_number(proto, "protocol.", "eta_r", default=0.95, lo=1e-9, hi=1.0),
    }

    src = _get_section(raw, "source")
    for key in src:
        if key not in ("alpha2", "T_S"):
            _fail(f"source.{key}", "unknown key")
    out["source"] = {
        "alpha2": _get_number(src, "source.", "alpha2", default=20.0, lo=1e-9),
        "T_S": _get_number(src, "source.", "T_S", default=0.7, lo=1e-9, hi=1.0),
    }

    schemes = raw.get("schemes", ["tmsv", "tps", "tpa"])
    if not isinstance(schemes, list) or not schemes:
        _fail("schemes", "must be a non-empty list")
    for i, scheme in enumerate(schemes):
        if scheme not in SCHEMES:
            _fail(f"schemes[{i}]", f"must be one of {list(SCHEMES)}")
    out["schemes"] = schemes

    n_list = raw.get("n_list", [1])
    if not isinstance(n_list, list) or not n_list:
        _fail("n_list", "must be a non-empty list")
    for i, n in enumerate(n_list):
        if not isinstance(n, int) or isinstance(n, bool) or n < 1 or n > 8:
            _fail(f"n_list[{i}]", "must be an integer in [1, 8]")
    out["n_list"] = n_list

    if mode in _FIXED_MODES:
        att = raw.get("attenuation_db")
        if att is None:
            _fail("attenuation_db", "missing required value")
        if not isinstance(att, list) or not att:
            _fail("attenuation_db", "must be a non-empty list")
        for i, a in enumerate(att):
            if isinstance(a, bool) or not isinstance(a, (int, float)) or not 0.0 < a < 100.0:
                _fail(f"attenuation_db[{i}]", "must be a number in (0, 100)")
        out["attenuation_db"] = [float(a) for a in att]

    if mode in _ENSEMBLE_MODES:
        scen = _get_section(raw, "scenario")
        for key in scen:
            if key not in ("wavelength", "W0", "r0", "L", "h0", "v", "A", "link"):
                _fail(f"scenario.{key}", "unknown key")
        link = scen.get("link", "downlink")
        if link not in ("uplink", "downlink"):
            _fail("scenario.link", "must be 'uplink' or 'downlink'")
        out["scenario"] = {
            "wavelength": _get_number(scen, "scenario.", "wavelength", default=809e-9, lo=1e-9),
            "W0": _get_number(scen, "scenario.", "W0", default=0.02, lo=1e-6),
            "r0": _get_number(scen, "scenario.", "r0", default=0.04, lo=1e-6),
            "L": _get_number(scen, "scenario.", "L", default=None, lo=1.0),
            "h0": _get_number(scen, "scenario.", "h0", default=0.0, lo=0.0),
            "v": _get_number(scen, "scenario.", "v", default=21.0, lo=0.0),
            "A": _get_number(scen, "scenario.", "A", default=1.7e-14, lo=0.0),
            "link": link,
        }
        model = _get_section(raw, "model")
        for key in model:
            if key not in ("kind", "fixed_ratio"):
                _fail(f"model.{key}", "unknown key")
        kind = model.get("kind", "full")
        if kind not in ("full", "wandering_only"):
            _fail("model.kind", "must be 'full' or 'wandering_only'")
        out["model"] = {
            "kind": kind,
            "fixed_ratio": _get_number(model, "model.", "fixed_ratio", default=2.0, lo=1e-6),
        }
        turb = _get_section(raw, "turbulence")
        for key in turb:
            if key not in ("sigma_I2", "target_attenuation_db", "from_profile"):
                _fail(f"turbulence.{key}", "unknown key")
        given = [k for k in ("sigma_I2", "target_attenuation_db", "from_profile") if k in turb]
        if len(given) != 1:
            _fail("turbulence", "provide exactly one of sigma_I2, target_attenuation_db, from_profile")
        if "sigma_I2" in turb:
            values = turb["sigma_I2"]
            values = values if isinstance(values, list) else [values]
            for i, s in enumerate(values):
                if isinstance(s, bool) or not isinstance(s, (int, float)) or s < 0.0:
                    _fail(f"turbulence.sigma_I2[{i}]", "must be a number >= 0")
            out["turbulence"] = {"sigma_I2": [float(s) for s in values]}
        elif "target_attenuation_db" in turb:
            values = turb["target_attenuation_db"]
            values = values if isinstance(values, list) else [values]
            for i, a in enumerate(values):
                if isinstance(a, bool) or not isinstance(a, (int, float)) or not 0.0 < a < 60.0:
                    _fail(f"turbulence.target_attenuation_db[{i}]", "must be a number in (0, 60)")
            out["turbulence"] = {"target_attenuation_db": [float(a) for a in values]}
        else:
            if turb["from_profile"] is not True:
                _fail("turbulence.from_profile", "must be true when present")
            out["turbulence"] = {"from_profile": True}
    return out


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path, columns, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    os.replace(tmp, path)


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _source_for(cfg, scheme, n_photons):
    return SourceParams(
        scheme=scheme,
        alpha2=cfg["source"]["alpha2"],
        T_S=1.0 if scheme == "tmsv" else cfg["source"]["T_S"],
        N=0 if scheme == "tmsv" else n_photons,
    )


def _scheme_loop(cfg):
    for scheme in cfg["schemes"]:
        for n_photons in [0] if scheme == "tmsv" else cfg["n_list"]:
            yield scheme, n_photons


def _noise(cfg):
    return NoiseParams(**cfg["protocol"])


def _fixed_rows(cfg, optimizing):
    noise = _noise(cfg)
    rows = []
    for att in cfg["attenuation_db"]:
        t_channel = 10.0 ** (-att / 10.0)
        bound = float(repeaterless_bound(t_channel))
        for scheme, n_photons in _scheme_loop(cfg):
            if optimizing:
                res = optimize_fixed(scheme, n_photons, t_channel, noise)
                params, rate = res.best_params, res.best_rate
                prob = key_rate(ProtocolParams.from_noise(params, noise), t_channel).success_prob
            else:
                params = _source_for(cfg, scheme, n_photons)
                result = key_rate(ProtocolParams.from_noise(params, noise), t_channel)
                rate, prob = result.rate, result.success_prob
            rows.append({
                "attenuation_db": att,
                "scheme": scheme,
                "N": n_photons,
                "alpha2": params.alpha2,
                "T_S": params.T_S,
                "rate": rate,
                "rb": bound,
                "success_prob": prob,
                "n_samples": 0,
                "seed": cfg["seed"],
            })
    return rows


def _build_ensembles(cfg):
    scen = TurbulenceScenario(**cfg["scenario"])
    model = ChannelModelKind(**cfg["model"])
    turb = cfg["turbulence"]
    if "sigma_I2" in turb:
        sigmas = turb["sigma_I2"]
    elif "from_profile" in turb:
        sigmas = [scenario_sigma_I2(scen)]
    else:
        sigmas = [
            calibrate_sigma_I2(scen, model, target, seed=cfg["seed"])
            for target in turb["target_attenuation_db"]
        ]
    ensembles = []
    for sigma in sigmas:
        stats = beam_statistics(scen, sigma)
        ens = sample_ensemble(stats, scen, model, cfg["samples"], cfg["seed"], cfg["workers"])
        ensembles.append((sigma, ens))
    return ensembles


def _ensemble_rows(cfg, mode):
    noise = _noise(cfg)
    rows = []
    for _, ens in _build_ensembles(cfg):
        bound, _ = repeaterless_bound_ensemble(ens)
        for scheme, n_photons in _scheme_loop(cfg):
            if mode == "fading":
                params = _source_for(cfg, scheme, n_photons)
                result = average_key_rate(ProtocolParams.from_noise(params, noise), ens)
                rate, prob = result.rate, result.success_prob
            else:
                opt = optimize_mean_based if mode == "optimize-mean" else optimize_per_sample
                kwargs = {} if mode == "optimize-mean" else {"knots": cfg["knots"]}
                res = opt(scheme, n_photons, ens, noise, **kwargs)
                params, rate = res.best_params, res.best_rate
                prob = key_rate(ProtocolParams.from_noise(params, noise), ens.mean_T).success_prob
            rows.append({
                "attenuation_db": ens.mean_attenuation_db,
                "scheme": scheme,
                "N": n_photons,
                "alpha2": params.alpha2,
                "T_S": params.T_S,
                "rate": rate,
                "rb": bound,
                "success_prob": prob,
                "n_samples": ens.n_samples,
                "seed": cfg["seed"],
            })
    return rows


def _pdf_rows(cfg):
    rows = []
    for sigma, ens in _build_ensembles(cfg):
        stats = ensemble_statistics(ens)
        widths = np.diff(stats.hist_edges)
        total = stats.hist_counts.sum()
        for i, count in enumerate(stats.hist_counts):
            rows.append({
                "sigma_I2": sigma,
                "mean_attenuation_db": stats.mean_attenuation_db,
                "bin_lo": float(stats.hist_edges[i]),
                "bin_hi": float(stats.hist_edges[i + 1]),
                "count": int(count),
                "density": float(count / (total * widths[i])) if total else 0.0,
            })
    return rows


def run(mode, cfg):
    """Execute one report mode; returns the manifest dictionary."""
    started = time.time()
    out_dir = cfg["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    stem = mode.replace("-", "_")
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    png_path = os.path.join(out_dir, f"{stem}.png")
    try:
        if mode == "transmissivity-pdf":
            rows = _pdf_rows(cfg)
            _write_csv(csv_path, PDF_COLUMNS, rows)
            plotting.histogram_figure(rows, png_path, "transmissivity distribution")
        else:
            if mode in _FIXED_MODES:
                rows = _fixed_rows(cfg, optimizing=(mode == "optimal-fixed"))
            else:
                rows = _ensemble_rows(cfg, mode)
            _write_csv(csv_path, RATE_COLUMNS, rows)
            plotting.rate_figure(rows, png_path, mode)
    except BaseException:
        for path in (csv_path + ".tmp",):
            if os.path.exists(path):
                os.remove(path)
        raise
    blob = json.dumps(cfg, sort_keys=True).encode()
    manifest = {
        "mode": mode,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "config": cfg,
        "seed": cfg["seed"],
        "samples": cfg["samples"],
        "workers": cfg["workers"],
        "package_version": _package_version(),
        "numpy_version": np.__version__,
        "runtime_seconds": round(time.time() - started, 3),
        "outputs": {
            os.path.basename(csv_path): _sha256(csv_path),
            os.path.basename(png_path): _sha256(png_path),
        },
    }
    manifest_path = os.path.join(out_dir, f"{stem}_manifest.json")
    tmp = manifest_path + ".tmp"
    with open(tmp, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    os.replace(tmp, manifest_path)
    return manifest


def _package_version():
    from . import __version__

    return __version__


def _parser():
    parser = argparse.ArgumentParser(
        prog="satqkd",
        description="Key-rate reports for entanglement-based CV-QKD over fading channels",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--seed", type=int, default=None, help="u64 stream seed (overrides config)")
        p.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quick", action="store_true", help=f"use {_QUICK_SAMPLES} samples")
        p.add_argument("--workers", type=int, default=None, help="sampler worker threads")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        try:
            with open(args.config) as handle:
                raw = yaml.safe_load(handle)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: invalid YAML: {exc}") from exc
        overrides = {
            "seed": args.seed,
            "samples": args.samples if args.samples else (_QUICK_SAMPLES if args.quick else None),
            "out": args.out,
            "workers": args.workers,
        }
        overrides = {k: v for k, v in overrides.items() if v is not None}
        cfg = _resolve_config(raw, args.mode, overrides)
        manifest = run(args.mode, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {', '.join(sorted(manifest['outputs']))} to {cfg['output_dir']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
