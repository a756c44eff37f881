"""Command-line front end.

Resolution order for every setting: built-in default, then the
``NODAL_MC_SEED`` environment variable (seed only), then a ``key=value``
config file (``--config``), then command-line flags. The resolved config
is echoed into every output together with its fingerprint and the seed.

Exit codes: 0 success, 1 usage error, 2 numerical or validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import Ensemble, PlaneChart, Sphere, Torus1, Torus2, lag_covariance
from .io import write_field_sample, write_segments_csv, write_values_csv
from .laws import SeedStream, parse_law
from .mcstats import (
    ExperimentSpec,
    Measurement,
    distribution_compare,
    fingerprint,
    locality_check,
    mc_expectation,
    variance_scan,
)
from .nodal import extract_segments, nodal_length, small_ball_probability
from .spectra import annulus_points, circle_points, sphere_degree
from .specfun import KernelSpec, bessel_j, isotropic_kernel, kac_rice_density, legendre_row

SCHEMA = 1

SUBCOMMANDS = (
    "sample",
    "expectation",
    "compare",
    "variance-scan",
    "covariance-check",
    "small-ball",
    "lattice",
    "kacrice",
    "locality-check",
)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# name -> (type, default)
SETTINGS = {
    "ensemble": (str, "arw"),
    "n": (int, 5),
    "ell": (int, 20),
    "T": (float, 30.0),
    "rho": (float, None),
    "J": (int, 256),
    "dim": (int, 2),
    "basis": (str, "real_basis"),
    "law": (str, "gaussian"),
    "law_b": (str, None),
    "grid": (int, 128),
    "side": (float, 4.0),
    "patch": (int, None),
    "m": (int, 100),
    "seed": (int, 0),
    "seed_b": (int, None),
    "index": (int, 0),
    "richardson": (_bool, False),
    "measure": (str, "global"),
    "radius": (float, None),
    "tau": (float, 0.05),
    "point": (str, "0.1,0.2"),
    "lags": (int, 10),
    "tol": (float, 0.02),
    "ladder": (str, None),
    "permutations": (int, 1000),
    "centers": (int, 16),
    "upsilon": (float, 1.0),
    "arw": (int, None),
    "window": (str, None),
    "sphere": (int, None),
    "workers": (int, 1),
    "out": (str, None),
    "format": (str, "json"),
    "values_format": (str, "csv"),
    "values_csv": (str, None),
    "contours": (str, None),
}
# Settings that do not change results and stay out of the fingerprint.
_NON_SEMANTIC = {"workers", "out", "format", "values_format", "values_csv", "contours"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p):
    a = p.add_argument
    S = argparse.SUPPRESS
    a("--config", default=S, help="key=value config file")
    a("--ensemble", choices=["arw", "sphere", "torus-window", "rwm"], default=S)
    a("--n", type=int, default=S, help="ARW: |mu|^2 = n")
    a("--ell", type=int, default=S, help="sphere degree")
    a("--T", type=float, default=S, help="torus window: outer frequency")
    a("--rho", type=float, default=S, help="torus window width (default T/log T)")
    a("--J", type=int, default=S, help="plane waves in the RWM superposition")
    a("--dim", type=int, default=S, help="torus window dimension (1 or 2)")
    a("--basis", choices=["real_basis", "complex_bernoulli"], default=S)
    a("--law", default=S, help="gaussian | rademacher | uniform | two-point:p")
    a("--grid", type=int, default=S, help="grid side N (sphere: N x 2N)")
    a("--side", type=float, default=S, help="plane chart side length")
    a("--m", type=int, default=S, help="replicates")
    a("--seed", type=int, default=S)
    a("--workers", type=int, default=S)
    a("--out", default=S, help="write the output here instead of stdout")
    a("--format", choices=["json", "csv", "table"], default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nodalmc", description="Monte Carlo nodal-volume laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    S = argparse.SUPPRESS

    p = sub.add_parser("sample", help="draw one field, report its nodal length, export grid values")
    _add_common(p)
    p.add_argument("--index", type=int, default=S, help="replicate index")
    p.add_argument("--values-format", dest="values_format", choices=["csv", "bin"], default=S)
    p.add_argument("--contours", default=S, help="CSV path for contour segments")
    p.add_argument("--values-out", dest="values_csv", default=S, help="path for grid values (+ .json header)")

    p = sub.add_parser("expectation", help="Monte Carlo mean of a nodal functional")
    _add_common(p)
    p.add_argument("--richardson", action="store_const", const=True, default=S)
    p.add_argument("--measure", choices=["global", "restricted"], default=S)
    p.add_argument("--radius", type=float, default=S)
    p.add_argument("--patch", type=int, default=S, help="synthesize only an N x N patch around the ball")
    p.add_argument("--values-csv", dest="values_csv", default=S, help="per-replicate CSV")

    p = sub.add_parser("compare", help="KS distance + permutation p-value between two laws")
    _add_common(p)
    p.add_argument("--law-b", dest="law_b", default=S)
    p.add_argument("--seed-b", dest="seed_b", type=int, default=S)
    p.add_argument("--measure", choices=["global", "restricted"], default=S)
    p.add_argument("--radius", type=float, default=S)
    p.add_argument("--patch", type=int, default=S)
    p.add_argument("--permutations", type=int, default=S)

    p = sub.add_parser("variance-scan", help="variance of nodal length along a parameter ladder")
    _add_common(p)
    p.add_argument("--ladder", default=S, help="comma-separated n / ell / T values")

    p = sub.add_parser("covariance-check", help="empirical covariance against the kernel")
    _add_common(p)
    p.add_argument("--lags", type=int, default=S)
    p.add_argument("--tol", type=float, default=S)

    p = sub.add_parser("small-ball", help="P(|f(x)| <= tau)")
    _add_common(p)
    p.add_argument("--tau", type=float, default=S)
    p.add_argument("--point", default=S, help="x,y (sphere: theta,phi)")

    p = sub.add_parser("lattice", help="print a frequency set as JSON")
    _add_common(p)
    p.add_argument("--arw", type=int, default=S, help="lattice points with |mu|^2 = n")
    p.add_argument("--window", default=S, help="dim,T,rho")
    p.add_argument("--sphere", type=int, default=S, help="spherical degree")

    p = sub.add_parser("kacrice", help="Kac-Rice nodal density constant")
    _add_common(p)
    p.add_argument("--upsilon", type=float, default=S, help="inner radius fraction of the annulus")

    p = sub.add_parser("locality-check", help="global vs ball-averaged nodal length (ARW)")
    _add_common(p)
    p.add_argument("--centers", type=int, default=S, help="ball centers per side")
    return parser


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in SETTINGS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value.strip()
    return out


def format_config_file(config: dict) -> str:
    lines = []
    for key in sorted(config):
        if key == "subcommand" or config[key] is None:
            continue
        v = config[key]
        lines.append(f"{key}={str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    raw = {k: d for k, (_, d) in SETTINGS.items()}
    if environ.get("NODAL_MC_SEED"):
        raw["seed"] = environ["NODAL_MC_SEED"]
    given = vars(args)
    if "config" in given:
        raw.update(read_config_file(given["config"]))
    for k, v in given.items():
        if k in SETTINGS:
            raw[k] = v
    config = {}
    for k, (typ, _) in SETTINGS.items():
        v = raw[k]
        try:
            config[k] = None if v is None else typ(v)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {k}: {v!r}") from exc
    config["ensemble"] = config["ensemble"].replace("-", "_")
    if config["ensemble"] not in ("arw", "torus_window", "sphere", "rwm"):
        raise UsageError(f"unknown ensemble {config['ensemble']!r}")
    for key in ("law", "law_b"):
        if config[key] is not None:
            try:
                parse_law(config[key])
            except ValueError as exc:
                raise UsageError(f"bad --{key.replace('_', '-')} {config[key]!r}: {exc}") from exc
    if config["format"] not in ("json", "csv", "table"):
        raise UsageError(f"unknown format {config['format']!r}")
    if config["rho"] is None and config["ensemble"] == "torus_window":
        config["rho"] = config["T"] / math.log(config["T"])
    config["subcommand"] = args.subcommand
    return config


def config_fingerprint(config: dict) -> str:
    return fingerprint({k: v for k, v in config.items() if k not in _NON_SEMANTIC})


# -- builders ----------------------------------------------------------------------


def _ensemble(cfg) -> Ensemble:
    kind = cfg["ensemble"]
    if kind == "arw":
        return Ensemble.arw(cfg["n"])
    if kind == "torus_window":
        return Ensemble.torus_window(cfg["T"], cfg["rho"], cfg["dim"])
    if kind == "sphere":
        return Ensemble.sphere(cfg["ell"], cfg["basis"])
    if kind == "rwm":
        return Ensemble.rwm(cfg["J"])
    raise UsageError(f"unknown ensemble {kind!r}")


def _geometry(cfg, ens: Ensemble):
    N = cfg["grid"]
    if ens.kind == "sphere":
        return Sphere(N, 2 * N)
    if ens.kind == "rwm":
        return PlaneChart(N, cfg["side"])
    if ens.kind == "torus_window" and ens.dim == 1:
        return Torus1(N)
    return Torus2(N)


def _measurement(cfg, ens):
    if cfg["measure"] == "global":
        return Measurement("global_length"), None
    radius = cfg["radius"] if cfg["radius"] is not None else 0.5 / ens.frequency
    patch = None
    if cfg["patch"]:
        patch = PlaneChart(cfg["patch"], 2.2 * radius)
    return Measurement("restricted_length", radius=cfg["radius"]), patch


def _point(cfg):
    try:
        return tuple(float(t) for t in cfg["point"].split(","))
    except ValueError as exc:
        raise UsageError(f"bad --point {cfg['point']!r}") from exc


def _spec(cfg, law=None, seed=None) -> ExperimentSpec:
    ens = _ensemble(cfg)
    meas, patch = _measurement(cfg, ens)
    geom = patch or _geometry(cfg, ens)
    return ExperimentSpec(
        ens,
        parse_law(law or cfg["law"]),
        geom,
        cfg["m"],
        cfg["seed"] if seed is None else seed,
        meas,
        cfg["richardson"] and meas.kind == "global_length",
    )


# -- subcommands -------------------------------------------------------------------


def cmd_kacrice(cfg):
    spec = KernelSpec(cfg["dim"], cfg["upsilon"])
    value = kac_rice_density(spec)
    if spec.inner_fraction >= 1.0:
        formula = "sqrt(4*pi/n) * Gamma((n+1)/2) / Gamma(n/2)"
    else:
        formula = "s * Gamma((n+1)/2) / (sqrt(pi) * Gamma(n/2)), s^2 = (2pi)^2/n * E|xi|^2 over the annulus"
    return {
        "dimension": spec.dimension,
        "upsilon": spec.inner_fraction,
        "value": value,
        "formula": formula,
        "meaning": "expected nodal volume per unit volume per unit frequency",
    }


def cmd_lattice(cfg):
    if cfg["arw"] is not None:
        fs = circle_points(cfg["arw"])
    elif cfg["window"] is not None:
        dim, T, rho = cfg["window"].split(",")
        fs = annulus_points(int(dim), float(T), float(rho))
    elif cfg["sphere"] is not None:
        fs = sphere_degree(cfg["sphere"])
    else:
        raise UsageError("lattice needs one of --arw, --window, --sphere")
    return fs.to_dict()


def cmd_sample(cfg):
    ens = _ensemble(cfg)
    geom = _geometry(cfg, ens)
    stream = SeedStream(cfg["seed"], cfg["index"])
    sample = ens.sample(parse_law(cfg["law"]), geom, stream)
    est = nodal_length(sample)
    result = {
        "replicate": cfg["index"],
        "nodal_length": est.length,
        "grid_step": est.grid_step,
        "excluded_region_bound": est.excluded_region_bound,
        "frequency": sample.frequency,
        "modes": sample.modes,
        "geometry": geom.to_dict(),
    }
    if cfg["values_csv"]:
        path, header = write_field_sample(sample, cfg["values_csv"], cfg["values_format"])
        result["values_file"], result["header_file"] = str(path), str(header)
    if cfg["contours"]:
        result["contours_file"] = str(write_segments_csv(extract_segments(sample), cfg["contours"]))
    return result


def cmd_expectation(cfg, workers):
    spec = _spec(cfg)
    s = mc_expectation(spec, workers)
    if cfg["values_csv"]:
        write_values_csv(s.values, cfg["values_csv"], spec.measurement.kind)
    out = {"experiment": spec.to_dict(), **s.to_dict()}
    ens = spec.ensemble
    if spec.measurement.kind == "global_length" and ens.kind != "rwm" and not (ens.kind == "torus_window" and ens.dim == 1):
        vol = 4 * math.pi if ens.kind == "sphere" else 1.0
        out["kac_rice_prediction"] = vol * kac_rice_density(KernelSpec(2)) * ens.frequency
    return out


def cmd_compare(cfg, workers):
    law_b = cfg["law_b"] or "rademacher"
    seed_b = cfg["seed_b"] if cfg["seed_b"] is not None else cfg["seed"] + 1
    a = _spec(cfg)
    b = _spec(cfg, law=law_b, seed=seed_b)
    res = distribution_compare(a, b, cfg["permutations"], workers)
    return {"experiment_a": a.to_dict(), "experiment_b": b.to_dict(), **res.to_dict()}


def cmd_variance_scan(cfg, workers):
    if not cfg["ladder"]:
        raise UsageError("variance-scan needs --ladder")
    ens_kind = cfg["ensemble"]
    key = {"arw": "n", "sphere": "ell", "torus_window": "T", "rwm": "J"}[ens_kind]
    conv = float if key == "T" else int
    family = []
    for tok in cfg["ladder"].split(","):
        c = dict(cfg)
        c[key] = conv(tok)
        if key == "T":
            c["rho"] = c["T"] / math.log(c["T"])
        family.append((conv(tok), _spec(c)))
    normalizer = None
    if ens_kind == "arw":
        # Var * r2(n)^2 / n, compared against the band [4 pi^2/512, 4 pi^2/256]
        normalizer = lambda n, spec: spec.ensemble.modes**2 / n
    result = variance_scan(family, workers, normalizer=normalizer)
    if normalizer is not None:
        result["reference_band"] = [4 * math.pi**2 / 512, 4 * math.pi**2 / 256]
    return result


def cmd_covariance_check(cfg):
    ens = _ensemble(cfg)
    geom = _geometry(cfg, ens)
    law = parse_law(cfg["law"])
    samples = [ens.sample(law, geom, SeedStream(cfg["seed"], k)) for k in range(cfg["m"])]
    rows = []
    for k in range(1, cfg["lags"] + 1):
        if ens.kind == "sphere":
            step = max(1, geom.n_theta // (4 * ens.ell))
            lag = (k * step, 0)
            dist = lag[0] * math.pi / geom.n_theta
            ref = float(legendre_row(ens.ell, np.array([math.cos(dist)]))[0, 0])
        else:
            step = max(1, int(round(geom.N / (10 * ens.frequency)))) if ens.kind != "rwm" else max(1, geom.N // 32)
            lag = (k * step, 0)
            dist = lag[0] * geom.step
            if ens.kind == "rwm":
                ref = float(bessel_j(0, 2 * math.pi * dist))
            elif ens.kind == "arw":
                mu = ens.frequency_set().points
                ref = float(np.mean(np.cos(2 * math.pi * mu[:, 0] * dist)))
            else:
                ups = 1.0 - ens.rho / ens.T
                ref = float(isotropic_kernel(KernelSpec(2, ups), ens.T * dist))
        est, se = lag_covariance(samples, lag)
        rows.append({"distance": dist, "empirical": est, "std_error": se, "reference": ref, "error": abs(est - ref)})
    worst = max(r["error"] for r in rows)
    return {"rows": rows, "max_error": worst, "tolerance": cfg["tol"], "pass": worst <= cfg["tol"]}


def cmd_small_ball(cfg):
    ens = _ensemble(cfg)
    law = parse_law(cfg["law"])
    p, se = small_ball_probability(ens, law, _point(cfg), cfg["tau"], cfg["m"], cfg["seed"])
    envelope = 10.0 * (cfg["tau"] + 1.0 / math.sqrt(ens.modes))
    return {"estimate": p, "std_error": se, "envelope": envelope, "within_envelope": p <= envelope + 3 * se}


def cmd_locality(cfg):
    if cfg["ensemble"] != "arw":
        raise UsageError("locality-check runs on the ARW ensemble")
    ens = _ensemble(cfg)
    law = parse_law(cfg["law"])
    geom = Torus2(cfg["grid"])
    samples = [ens.sample(law, geom, SeedStream(cfg["seed"], k)) for k in range(cfg["m"])]
    return locality_check(samples, centers_per_side=cfg["centers"])


# -- output ------------------------------------------------------------------------


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            for i, item in enumerate(v):
                yield from _flatten(item, f"{key}[{i}].")
        else:
            yield key, v


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    pairs = list(_flatten(doc))
    if fmt == "csv":
        import csv
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in pairs:
            w.writerow([k, json.dumps(v, default=_json_default) if isinstance(v, (list, dict)) else v])
        return buf.getvalue()
    width = max(len(k) for k, _ in pairs)
    return "".join(f"{k:<{width}}  {v}\n" for k, v in pairs)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def run(argv=None, environ=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.subcommand:
            raise UsageError(f"missing subcommand; choose from {', '.join(SUBCOMMANDS)}")
        cfg = resolve_config(args, environ)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 1
    workers = cfg["workers"]
    handlers = {
        "kacrice": cmd_kacrice,
        "lattice": cmd_lattice,
        "sample": cmd_sample,
        "expectation": lambda c: cmd_expectation(c, workers),
        "compare": lambda c: cmd_compare(c, workers),
        "variance-scan": lambda c: cmd_variance_scan(c, workers),
        "covariance-check": cmd_covariance_check,
        "small-ball": cmd_small_ball,
        "locality-check": cmd_locality,
    }
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = handlers[cfg["subcommand"]](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError, AssertionError, TypeError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    doc = {
        "schema": SCHEMA,
        "subcommand": cfg["subcommand"],
        "seed": cfg["seed"],
        "fingerprint": config_fingerprint(cfg),
        "config": cfg,
        "result": result,
    }
    text = render(doc, cfg["format"])
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        stdout.write(text)
    if cfg["subcommand"] == "covariance-check" and not result["pass"]:
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
