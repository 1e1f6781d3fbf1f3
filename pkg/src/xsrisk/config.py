"""Run configuration: JSON documents, presets and dotted overrides.

A config is a plain dict with exactly one model block::

    {"discrete": {"prior": [0.3, 0.7], "eps1": 0.15, "eps2": 0.05},
     "methods": ["renyi", "js", "sibson"],
     "alpha": {"start": 0.01, "stop": 0.99, "count": 99}}

The discrete prior is a list or ``{"dirichlet": {"q": .., "concentration": ..,
"seed": ..}}``. Channels are q-ary symmetric (``eps1``/``eps2``) or explicit
``w1``/``w2`` matrices, given inline or as a path to a text matrix file.
"""

import copy
import json
import os

import numpy as np

from . import discrete as dm
from . import gaussian as gm
from .errors import ConfigError, XsriskError

DEFAULT_ALPHA = {"start": 0.01, "stop": 0.99, "count": 99}
DEFAULT_METHODS = {"discrete": ["renyi", "js", "sibson"], "gaussian": ["renyi", "js"]}
DIRICHLET_SEED = 42
QSC_EPS = {"eps1": 0.15, "eps2": 0.05}


def _qsc(prior):
    return {"discrete": dict(prior=prior, **QSC_EPS)}


def _qsc_dirichlet(q):
    return {"discrete": dict(prior={"dirichlet": {"q": q, "concentration": 2.0, "seed": DIRICHLET_SEED}},
                             **QSC_EPS)}


PRESETS = {
    "q2": _qsc([0.3, 0.7]),
    "q3": _qsc([0.4, 0.2, 0.4]),
    "q5": _qsc([0.25, 0.1, 0.4, 0.15, 0.1]),
    "q10": _qsc_dirichlet(10),
    "q100": _qsc_dirichlet(100),
    "q200": _qsc_dirichlet(200),
    "example2": {"gaussian": {"var_input": 1.0, "var_n1": 1.0, "var_n2": 1.0, "direction": "forward", "c": 1.0}},
    "example3": {"gaussian": {"var_input": 2.0, "var_n1": 39.0, "var_n2": 1.0, "direction": "reverse", "c": 1.0}},
}
DISCRETE_PRESETS = ("q2", "q3", "q5", "q10", "q100", "q200")
GAUSSIAN_PRESETS = ("example2", "example3")


def preset(name):
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    return doc


def merge(base, extra):
    """Recursive dict merge; ``extra`` wins."""
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_dotted(cfg, key, value):
    """Set ``a.b.c`` in a nested dict; ``value`` is parsed as JSON when possible."""
    try:
        parsed = json.loads(value) if isinstance(value, str) else value
    except json.JSONDecodeError:
        parsed = value
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"{key}: {p} is not an object")
        node = nxt
    node[parts[-1]] = parsed
    return cfg


def model_kind(cfg):
    blocks = [k for k in ("discrete", "gaussian") if k in cfg]
    if len(blocks) != 1:
        raise ConfigError(f"model: exactly one of 'discrete' or 'gaussian' is required, found {blocks or 'none'}")
    return blocks[0]


def _number(block, key, where):
    if key not in block:
        raise ConfigError(f"{where}.{key}: missing")
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _matrix(value, where, base_dir):
    if isinstance(value, str):
        path = value if os.path.isabs(value) else os.path.join(base_dir, value)
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read().replace(",", " ")
        except OSError as exc:
            raise ConfigError(f"{where}: cannot read matrix file {value}: {exc.strerror}") from exc
        rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
        try:
            return np.array([[float(x) for x in r] for r in rows])
        except ValueError as exc:
            raise ConfigError(f"{where}: {value} is not a numeric matrix") from exc
    try:
        return np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: not a numeric matrix") from exc


def build_discrete(block, base_dir="."):
    """MarkovChainSpec from a discrete block."""
    where = "discrete"
    prior = block.get("prior")
    if prior is None:
        raise ConfigError(f"{where}.prior: missing")
    try:
        if isinstance(prior, dict):
            d = prior.get("dirichlet")
            if not isinstance(d, dict):
                raise ConfigError(f"{where}.prior: expected a list or {{'dirichlet': {{...}}}}")
            cfg = dm.DirichletConfig(int(_number(d, "q", f"{where}.prior.dirichlet")),
                                     d.get("concentration", 2.0), int(d.get("seed", DIRICHLET_SEED)))
            p = dm.dirichlet_prior(cfg)
        else:
            p = np.array(prior, dtype=float)
    except ConfigError:
        raise
    except (XsriskError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}.prior: {exc}") from exc

    q = p.size
    try:
        if "w1" in block or "w2" in block:
            w1 = _matrix(block.get("w1"), f"{where}.w1", base_dir)
            w2 = _matrix(block.get("w2"), f"{where}.w2", base_dir)
            for name, w in (("w1", w1), ("w2", w2)):
                try:
                    dm.check_channel(w, name)
                except XsriskError as exc:
                    raise ConfigError(f"{where}.{name}: {exc}") from exc
        else:
            w1 = dm.qsc_matrix(q, _number(block, "eps1", where))
            w2 = dm.qsc_matrix(q, _number(block, "eps2", where))
        return dm.MarkovChainSpec(p, w1, w2)
    except ConfigError:
        raise
    except XsriskError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_gaussian(block):
    """(GaussianChainSpec, ClampedAbsLoss) from a gaussian block."""
    where = "gaussian"
    vals = {k: _number(block, k, where) for k in ("var_input", "var_n1", "var_n2")}
    c = _number(block, "c", where) if "c" in block else 1.0
    direction = block.get("direction", "forward")
    try:
        return gm.GaussianChainSpec(direction=gm.Direction(direction), **vals), gm.ClampedAbsLoss(c)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def alpha_grid(cfg):
    spec = {**DEFAULT_ALPHA, **cfg.get("alpha", {})}
    start = _number(spec, "start", "alpha")
    stop = _number(spec, "stop", "alpha")
    count = spec["count"]
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise ConfigError(f"alpha.count: expected a positive integer, got {count!r}")
    if not (0.0 < start < 1.0 and 0.0 < stop < 1.0):
        raise ConfigError(f"alpha: start and stop must lie in (0, 1), got {start} and {stop}")
    if count > 1 and not start < stop:
        raise ConfigError("alpha: start must be below stop")
    if count == 1:
        return np.array([start])
    return np.round(np.linspace(start, stop, count), 12)


def methods(cfg, kind):
    ms = cfg.get("methods", DEFAULT_METHODS[kind])
    if isinstance(ms, str):
        ms = [m for m in ms.split(",") if m]
    if not isinstance(ms, list) or not ms:
        raise ConfigError("methods: expected a non-empty list")
    return list(ms)


def quad_order(cfg):
    order = cfg.get("quad_order", 64)
    if isinstance(order, bool) or not isinstance(order, int) or order < gm.MIN_QUAD_ORDER:
        raise ConfigError(f"quad_order: expected an integer >= {gm.MIN_QUAD_ORDER}, got {order!r}")
    return order
