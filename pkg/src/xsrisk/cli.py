"""Command-line front end.

    xsrisk qsc --preset q5 --format csv,svg
    xsrisk gaussian --preset example3 --methods js,renyi,lautum
    xsrisk sweep --config chain.json --discrete.eps2=0.1
    xsrisk validate --only sibson

Exit codes: 0 success, 1 failed validation or runtime error, 2 usage error.
Nothing is written unless the whole run succeeds.
"""

import argparse
import json
import os
import sys

import numpy as np
import scipy

from . import __version__
from . import bounds as bd
from . import config as cf
from . import gaussian as gm
from . import oracles, svg, tables
from .errors import ConfigError, XsriskError

FORMATS = ("csv", "json", "svg")


class UsageError(Exception):
    pass


def _common(parser):
    parser.add_argument("--preset", help="named configuration (see --help of each command)")
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--alpha-start", type=float)
    parser.add_argument("--alpha-stop", type=float)
    parser.add_argument("--alpha-count", type=int)
    parser.add_argument("--format", default="csv", help="comma-separated subset of csv,json,svg")
    parser.add_argument("--out", help="output directory (default $XSRISK_OUT or ./out)")
    parser.add_argument("--seed", type=int, help="Dirichlet prior seed, or oracle seed for validate")
    parser.add_argument("--quad-order", type=int, help="Gauss-Hermite order per dimension")
    parser.add_argument("--methods", help="comma-separated bound methods")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xsrisk",
        description="Divergence bounds on excess minimum risk for Markov chains Y -> X -> Z.",
        epilog="Any config field can be overridden with --dotted.name=value, e.g. --discrete.eps2=0.",
    )
    parser.add_argument("--version", action="version", version=f"xsrisk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("qsc", help=f"q-ary symmetric channel cascades; presets {', '.join(cf.DISCRETE_PRESETS)}")
    _common(p)
    p = sub.add_parser("gaussian", help=f"Gaussian additive-noise chains; presets {', '.join(cf.GAUSSIAN_PRESETS)}")
    _common(p)
    p = sub.add_parser("sweep", help="generic sweep from a config file and flags")
    _common(p)
    p = sub.add_parser("validate", help="run the oracle suite")
    _common(p)
    p.add_argument("--only", help=f"comma-separated subset of {','.join(oracles.GROUPS)}")
    p.add_argument("--limit-count", type=int, default=100)
    p.add_argument("--sibson-count", type=int, default=50)
    p.add_argument("--identity-count", type=int, default=200)
    p.add_argument("--decoupling-count", type=int, default=1000)
    p.add_argument("--js-samples", type=int, default=1_000_000)
    return parser


def _split_overrides(extra):
    """Turn leftover ``--a.b=v`` / ``--a.b v`` tokens into (key, value) pairs."""
    pairs, i = [], 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok.split("=", 1)[0]:
            raise UsageError(f"unrecognized argument {tok!r}")
        if "=" in tok:
            key, value = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"{tok} needs a value")
            key, value = tok[2:], extra[i + 1]
            i += 2
        pairs.append((key, value))
    return pairs


def _formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise UsageError(f"--format: expected a subset of {','.join(FORMATS)}, got {text!r}")
    return fmts


def resolve_config(args, overrides, default_preset=None, allowed_presets=None):
    """Preset, then config file, then flags, then dotted overrides."""
    cfg = {}
    name = args.preset or (None if args.config else default_preset)
    if name:
        if allowed_presets and name not in allowed_presets:
            raise ConfigError(f"preset: {name!r} is not valid here; choose from {list(allowed_presets)}")
        cfg = cf.preset(name)
    base_dir = "."
    if args.config:
        cfg = cf.merge(cfg, cf.load(args.config))
        base_dir = os.path.dirname(os.path.abspath(args.config))
    for flag, key in (("alpha_start", "alpha.start"), ("alpha_stop", "alpha.stop"), ("alpha_count", "alpha.count")):
        v = getattr(args, flag)
        if v is not None:
            cf.set_dotted(cfg, key, v)
    if args.quad_order is not None:
        cfg["quad_order"] = args.quad_order
    if args.methods:
        cfg["methods"] = [m for m in args.methods.split(",") if m]
    if args.seed is not None and isinstance(cfg.get("discrete", {}).get("prior"), dict):
        cf.set_dotted(cfg, "discrete.prior.dirichlet.seed", args.seed)
    for key, value in overrides:
        cf.set_dotted(cfg, key, value)
    stem = name or (os.path.splitext(os.path.basename(args.config))[0] if args.config else "sweep")
    return cfg, base_dir, stem


def _echo(cfg, kind):
    """Config echo for metadata, with defaults filled in."""
    echo = {kind: cfg[kind], "methods": cf.methods(cfg, kind), "alpha": {**cf.DEFAULT_ALPHA, **cfg.get("alpha", {})}}
    if kind == "gaussian":
        echo["quad_order"] = cf.quad_order(cfg)
    return echo


def compute(cfg, base_dir="."):
    """Run the sweep described by ``cfg``; returns (BoundCurve, metadata)."""
    kind = cf.model_kind(cfg)
    grid = cf.alpha_grid(cfg)
    methods = cf.methods(cfg, kind)
    meta = {
        "config": _echo(cfg, kind),
        "versions": {"xsrisk": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }
    if kind == "discrete":
        model = cf.build_discrete(cfg["discrete"], base_dir)
        curve = bd.sweep(model, methods, grid)
        prior = cfg["discrete"]["prior"]
        if isinstance(prior, dict):
            meta["seeds"] = {"dirichlet": int(prior["dirichlet"].get("seed", cf.DIRICHLET_SEED))}
        meta["loss"] = {"kind": "0-1", "linf": 1.0}
    else:
        spec, loss = cf.build_gaussian(cfg["gaussian"])
        var_y = float(gm.chain_covariance(spec)[0, 0])
        e_sigma2 = gm.expected_sigma2(loss, var_y)
        order = cf.quad_order(cfg)
        curve = bd.sweep(spec, methods, grid, bd.SubGaussProfile.expected(e_sigma2), quad_order=order)
        meta["loss"] = {"kind": "clamped-abs", "c": loss.c}
        meta["e_sigma2"] = e_sigma2
        meta["var_y"] = var_y
    return curve, meta


def _out_dir(args):
    return args.out or os.environ.get("XSRISK_OUT") or "out"


def _render(curve, meta, fmts, stem):
    files = {}
    if "csv" in fmts:
        files[f"{stem}.csv"] = tables.to_csv(curve, meta)
    if "json" in fmts:
        files[f"{stem}.json"] = tables.to_json(curve, meta)
    if "svg" in fmts:
        files[f"{stem}.svg"] = svg.render(curve, title=stem)
    return files


def _write(out_dir, files):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        tables.write_atomic(path, text)
        paths.append(path)
    return paths


def _summary(curve):
    refs = ", ".join(f"{k}={tables.fmt(v)}" for k, v in curve.references.items())
    lines = [f"references: {refs}"]
    mi = curve.references["mi"]
    for m, v in curve.curves.items():
        below = bd.below_interval(curve.alphas, v, mi)
        span = f"[{below[0]:g}, {below[-1]:g}] ({below.size} pts)" if below.size else "none"
        lines.append(f"{m}: min {tables.fmt(np.min(v))}; below mi at {span}")
    return "\n".join(lines)


def cmd_curves(args, overrides, default_preset, allowed_presets, require_kind=None):
    fmts = _formats(args.format)
    cfg, base_dir, stem = resolve_config(args, overrides, default_preset, allowed_presets)
    kind = cf.model_kind(cfg)
    if require_kind and kind != require_kind:
        raise ConfigError(f"model: this command needs a {require_kind} block, got {kind}")
    curve, meta = compute(cfg, base_dir)
    files = _render(curve, meta, fmts, stem)
    for path in _write(_out_dir(args), files):
        print(f"wrote {path}")
    print(_summary(curve))
    return 0


def cmd_validate(args, overrides):
    if overrides:
        raise UsageError("validate takes no dotted overrides")
    only = [g for g in (args.only or "").split(",") if g] or None
    if only:
        bad = sorted(set(only) - set(oracles.GROUPS))
        if bad:
            raise UsageError(f"--only: unknown groups {bad}; choose from {list(oracles.GROUPS)}")
    alphas = oracles.ALPHAS
    if any(v is not None for v in (args.alpha_start, args.alpha_stop, args.alpha_count)):
        spec = {}
        for flag, key in (("alpha_start", "start"), ("alpha_stop", "stop"), ("alpha_count", "count")):
            if getattr(args, flag) is not None:
                spec[key] = getattr(args, flag)
        alphas = tuple(float(a) for a in cf.alpha_grid({"alpha": {**cf.DEFAULT_ALPHA, "count": 9,
                                                                   "start": 0.1, "stop": 0.9, **spec}}))
    for name in ("limit_count", "sibson_count", "identity_count", "decoupling_count"):
        if getattr(args, name) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be at least 1")
    if args.js_samples < 1_000_000:
        raise UsageError("--js-samples must be at least 1000000")
    seed = 7 if args.seed is None else args.seed
    reports = oracles.run_suite(
        seed=seed, only=only, limit_count=args.limit_count, sibson_count=args.sibson_count,
        identity_count=args.identity_count, decoupling_count=args.decoupling_count,
        js_samples=args.js_samples, alphas=alphas,
    )
    lines = [json.dumps({**r.record(), "seed": seed}, sort_keys=True) for r in reports]
    path = _write(_out_dir(args), {"validate_report.jsonl": "\n".join(lines) + "\n"})[0]
    failed = [r for r in reports if not r.passed]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {r.metric} discrepancy {r.discrepancy:.3e} (tol {r.tolerance:.1e}, {r.cases} cases)")
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed; report at {path}")
    if failed:
        print("failed: " + ", ".join(r.name for r in failed), file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        overrides = _split_overrides(extra)
        if args.command == "qsc":
            return cmd_curves(args, overrides, "q2", cf.DISCRETE_PRESETS, "discrete")
        if args.command == "gaussian":
            return cmd_curves(args, overrides, "example2", cf.GAUSSIAN_PRESETS, "gaussian")
        if args.command == "sweep":
            if not args.config and not args.preset:
                raise UsageError("sweep needs --config or --preset")
            return cmd_curves(args, overrides, None, None)
        return cmd_validate(args, overrides)
    except (UsageError, ConfigError) as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"xsrisk: I/O error: {exc}", file=sys.stderr)
        return 1
    except XsriskError as exc:
        print(f"xsrisk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
