"""Excess-risk bounds assembled from divergence terms, and alpha sweeps.

Every bound has the shape sqrt(2 * sigma^2 * divergence / normalizer). Terms
equal to +inf give +inf bounds; nothing is clamped at the trivial value.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import discrete as dm
from . import gaussian as gm
from .divergences import binary_entropy, check_alpha
from .errors import ConfigError, ConsistencyError, DomainError

JS_SLACK = 1e-9


def _nonneg(x, name):
    x = float(x)
    if math.isnan(x) or x < 0:
        raise DomainError(f"{name} must be nonnegative, got {x!r}")
    return x


def _root(scale, term):
    if math.isinf(term):
        return math.inf
    return math.sqrt(scale * term)


def renyi_bound(e_sigma2, term, alpha):
    a = check_alpha(alpha, unit=True)
    return _root(2.0 * _nonneg(e_sigma2, "e_sigma2") / a, _nonneg(term, "term"))


def renyi_bound_bounded(linf, term, alpha):
    return renyi_bound(_nonneg(linf, "linf") ** 2 / 4.0, term, alpha)


def js_bound(e_sigma2, term, alpha):
    a = check_alpha(alpha, unit=True)
    term = _nonneg(term, "term")
    cap = binary_entropy(a)
    if term > cap + JS_SLACK:
        raise ConsistencyError(f"JS term {term!r} exceeds H_b({a}) = {cap!r}")
    return _root(2.0 * _nonneg(e_sigma2, "e_sigma2") / (a * (1.0 - a)), term)


def js_bound_bounded(linf, term, alpha):
    return js_bound(_nonneg(linf, "linf") ** 2 / 4.0, term, alpha)


def sibson_bound_general(sigma2, phi_term, term, alpha):
    """Sibson bound with caller-supplied sigma^2 and log-MGF average phi_term."""
    a = check_alpha(alpha, unit=True)
    mix = (1.0 - a) * _nonneg(sigma2, "sigma2") + a * _nonneg(phi_term, "phi_term")
    return _root(2.0 * mix / a, _nonneg(term, "term"))


def sibson_bound_bounded(linf, term, alpha):
    """(linf / sqrt 2) sqrt((4 - 3 alpha) term / alpha)."""
    a = check_alpha(alpha, unit=True)
    linf = _nonneg(linf, "linf")
    return _root(linf * linf * (4.0 - 3.0 * a) / (2.0 * a), _nonneg(term, "term"))


def mi_bound(e_sigma2, gap):
    return _root(2.0 * _nonneg(e_sigma2, "e_sigma2"), _nonneg(gap, "gap"))


def mi_bound_bounded(linf, gap):
    return mi_bound(_nonneg(linf, "linf") ** 2 / 4.0, gap)


def lautum_bound(e_sigma2, lautum_gap):
    return mi_bound(e_sigma2, lautum_gap)


@dataclass(frozen=True)
class SubGaussProfile:
    """Sub-Gaussian parameter of the loss.

    kind is "constant" (sigma2 holds sigma^2) or "expected" (sigma2 holds
    E[sigma^2(Y)]). ``linf`` is the loss sup-norm when the loss is bounded.
    """

    kind: str
    sigma2: float
    linf: float = None

    def __post_init__(self):
        if self.kind not in ("constant", "expected"):
            raise DomainError(f"profile kind must be 'constant' or 'expected', got {self.kind!r}")
        if not float(self.sigma2) > 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2!r}")
        if self.linf is not None and not float(self.linf) > 0:
            raise DomainError(f"linf must be positive, got {self.linf!r}")

    @classmethod
    def bounded(cls, linf):
        return cls("constant", float(linf) ** 2 / 4.0, float(linf))

    @classmethod
    def expected(cls, e_sigma2):
        return cls("expected", float(e_sigma2))


METHODS = ("renyi", "js", "sibson")
SUPPORTED = {
    "discrete": frozenset({"renyi", "js", "sibson", "mi", "lautum"}),
    "gaussian": frozenset({"renyi", "js", "mi", "lautum"}),
}
DEFAULT_GRID = np.round(np.arange(1, 100) / 100.0, 2)


@dataclass
class BoundCurve:
    """Bound values over an alpha grid plus alpha-free reference values.

    ``curves`` maps a method to an array aligned with ``alphas``;
    ``references`` holds mi, lautum and (discrete only) true_excess.
    """

    alphas: np.ndarray
    curves: dict
    references: dict
    metadata: dict = field(default_factory=dict)


def check_grid(grid):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ConfigError("alpha grid must be a non-empty vector")
    if not np.all((g > 0) & (g < 1)):
        raise ConfigError(f"alpha grid must lie in (0, 1); got values in [{g.min()}, {g.max()}]")
    if np.any(np.diff(g) <= 0):
        raise ConfigError("alpha grid must be strictly increasing")
    return g


def _model_kind(model):
    if isinstance(model, dm.MarkovChainSpec):
        return "discrete"
    if isinstance(model, gm.GaussianChainSpec):
        return "gaussian"
    raise ConfigError(f"unsupported model type {type(model).__name__}")


def _check_methods(kind, methods):
    methods = set(methods)
    if not methods:
        raise ConfigError("methods must be non-empty")
    bad = methods - SUPPORTED[kind]
    if bad:
        raise ConfigError(
            f"methods {sorted(bad)} not supported for {kind} models; supported: {sorted(SUPPORTED[kind])}"
        )
    return methods


def _discrete_point(c, alpha, methods, linf):
    a = float(alpha)
    out = {}
    if "renyi" in methods:
        out["renyi"] = renyi_bound_bounded(linf, dm.renyi_term(c, a), a)
    if "js" in methods:
        out["js"] = js_bound_bounded(linf, dm.js_term(c, a), a)
    if "sibson" in methods:
        out["sibson"] = sibson_bound_bounded(linf, dm.sibson_term(c, a), a)
    return out


def _gaussian_point(spec, alpha, methods, e_sigma2, rule):
    a = float(alpha)
    out = {}
    if "renyi" in methods:
        out["renyi"] = renyi_bound(e_sigma2, gm.gaussian_renyi_term(spec, a), a)
    if "js" in methods:
        out["js"] = js_bound(e_sigma2, gm.gaussian_js_term(spec, a, rule), a)
    return out


def sweep(model, methods, grid=None, profile=None, quad_order=64, workers=1):
    """Evaluate the requested bounds at every alpha in ``grid``.

    Discrete models default to the 0-1 loss profile (linf = 1) and need a
    bounded profile; Gaussian models need an explicit profile carrying
    E[sigma^2(Y)]. The mi reference is always attached; lautum is attached
    when requested. Output does not depend on ``workers``.
    """
    kind = _model_kind(model)
    methods = _check_methods(kind, methods)
    alphas = check_grid(DEFAULT_GRID if grid is None else grid)
    per_alpha = [m for m in METHODS if m in methods]

    if kind == "discrete":
        profile = profile or SubGaussProfile.bounded(1.0)
        if profile.linf is None:
            raise ConfigError("discrete sweeps use the bounded-loss bounds and need profile.linf")
        linf = float(profile.linf)
        t = dm.chain_joint(model)
        c = dm.conditionals(t)

        def point(a):
            return _discrete_point(c, a, methods, linf)

        refs = {"mi": mi_bound_bounded(linf, dm.mi_gap(t))}
        if "lautum" in methods:
            refs["lautum"] = lautum_bound(linf * linf / 4.0, dm.cond_lautum_term(c))
        refs["true_excess"] = dm.excess_risk_01(t)
        e_sigma2 = linf * linf / 4.0
    else:
        if profile is None:
            raise ConfigError("Gaussian sweeps need a SubGaussProfile with E[sigma^2(Y)]")
        e_sigma2 = float(profile.sigma2)
        rule = gm.gauss_hermite_rule(quad_order) if "js" in methods else None

        def point(a):
            return _gaussian_point(model, a, methods, e_sigma2, rule)

        refs = {"mi": mi_bound(e_sigma2, gm.gaussian_mi_gap(model))}
        if "lautum" in methods:
            refs["lautum"] = lautum_bound(e_sigma2, gm.gaussian_cond_lautum(model))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            rows = list(pool.map(point, alphas))
    else:
        rows = [point(a) for a in alphas]
    curves = {m: np.array([r[m] for r in rows]) for m in per_alpha}
    metadata = {
        "model": kind,
        "methods": sorted(methods),
        "e_sigma2": e_sigma2,
        "grid": {"start": float(alphas[0]), "stop": float(alphas[-1]), "count": int(alphas.size)},
        "version": __version__,
    }
    if kind == "gaussian" and "js" in methods:
        metadata["quad_order"] = int(quad_order)
    return BoundCurve(alphas, curves, refs, metadata)


def below_interval(alphas, curve, reference):
    """Alphas where ``curve`` is strictly below ``reference``."""
    alphas = np.asarray(alphas)
    return alphas[np.asarray(curve) < reference]
