"""Independent oracles for the analytic code paths.

Nothing here calls the log-domain kernels in ``divergences``; sums are formed
term by term with ``math.fsum`` so the two implementations fail differently.
The package functions appear only as the thing being checked.
"""

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import divergences as dv
from . import gaussian as gm
from .errors import DomainError

# ---------------------------------------------------------------------------
# naive kernels
# ---------------------------------------------------------------------------


def naive_kl(p, q):
    terms = []
    for pi, qi in zip(np.ravel(p), np.ravel(q)):
        if pi == 0:
            continue
        if qi == 0:
            return math.inf
        terms.append(pi * math.log(pi / qi))
    return max(math.fsum(terms), 0.0)


def naive_renyi(p, q, alpha):
    s = math.fsum(
        pi**alpha * qi ** (1.0 - alpha) for pi, qi in zip(np.ravel(p), np.ravel(q)) if pi > 0 and qi > 0
    )
    if s == 0:
        return math.inf
    return max(math.log(s) / (alpha - 1.0), 0.0)


def naive_js(p, q, alpha):
    p, q = np.ravel(p), np.ravel(q)
    m = [alpha * pi + (1.0 - alpha) * qi for pi, qi in zip(p, q)]
    return max(alpha * naive_kl(p, m) + (1.0 - alpha) * naive_kl(q, m), 0.0)


def naive_product(j):
    j = np.asarray(j, dtype=float)
    pu = [math.fsum(row) for row in j]
    pv = [math.fsum(col) for col in j.T]
    return np.array([[a * b for b in pv] for a in pu]), np.array(pu), np.array(pv)


def naive_mi(j):
    prod, _, _ = naive_product(j)
    return naive_kl(j, prod)


def naive_lautum(j):
    prod, _, _ = naive_product(j)
    return naive_kl(prod, j)


def naive_sibson_objective(j, qu, alpha):
    """D_alpha(j || qu x p_V) evaluated for many candidate qu at once (rows of qu)."""
    j = np.asarray(j, dtype=float)
    pv = j.sum(axis=0)
    qu = np.atleast_2d(qu)
    ref = qu[:, :, None] * pv[None, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where((j > 0) & (ref > 0), j**alpha * ref ** (1.0 - alpha), 0.0)
    s = terms.reshape(qu.shape[0], -1).sum(axis=1)
    with np.errstate(divide="ignore"):
        return np.log(s) / (alpha - 1.0)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleReport:
    """Outcome of one named check.

    ``discrepancy`` is the quantity compared with ``tolerance`` (absolute or
    relative as named by ``metric``); ``passed`` is true exactly when it does
    not exceed the tolerance.
    """

    name: str
    max_abs: float
    max_rel: float
    tolerance: float
    metric: str = "abs"
    cases: int = 1
    details: dict = field(default_factory=dict)

    @property
    def discrepancy(self):
        return self.max_abs if self.metric == "abs" else self.max_rel

    @property
    def passed(self):
        return bool(self.discrepancy <= self.tolerance)

    def record(self):
        out = asdict(self)
        out["discrepancy"] = self.discrepancy
        out["passed"] = self.passed
        return out


def _report(name, abs_errs, rel_errs, tol, metric="abs", **details):
    abs_errs = list(abs_errs) or [0.0]
    rel_errs = list(rel_errs) or [0.0]
    return OracleReport(
        name=name,
        max_abs=float(max(abs_errs)),
        max_rel=float(max(rel_errs)),
        tolerance=float(tol),
        metric=metric,
        cases=len(abs_errs),
        details=details,
    )


def _gap(a, b):
    """|a - b| with +inf == +inf counted as agreement."""
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    return abs(a - b)


@dataclass(frozen=True)
class RandomJointConfig:
    dims: tuple
    seed: int = 0
    count: int = 100

    def __post_init__(self):
        if len(self.dims) != 2 or min(self.dims) < 2:
            raise DomainError(f"dims must be two sizes of at least 2, got {self.dims!r}")
        if int(self.count) < 1:
            raise DomainError("count must be at least 1")


def random_joints(cfg):
    """Uniform draws from the simplex of (q_u x q_v) joints."""
    rng = np.random.default_rng(cfg.seed)
    qu, qv = cfg.dims
    return [rng.dirichlet(np.ones(qu * qv)).reshape(qu, qv) for _ in range(cfg.count)]


# ---------------------------------------------------------------------------
# Sibson brute force
# ---------------------------------------------------------------------------

MAX_BRUTE_QU = 4
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def simplex_grid(k, step):
    n = int(round(1.0 / step))
    pts = [c for c in itertools.combinations_with_replacement(range(k), n)]
    counts = np.zeros((len(pts), k))
    for i, c in enumerate(pts):
        np.add.at(counts[i], list(c), 1)
    return counts / n


def _line_min(f, lo, hi, tol=1e-13, max_iter=200):
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def sibson_bruteforce(j, alpha, resolution=0.02, max_passes=500):
    """min over Q_U of D_alpha(j || Q_U x P_V) by grid search and pairwise descent.

    The objective is convex in Q_U, so the best grid point lies next to the
    minimizer. Coordinate descent then moves mass between pairs of entries
    with a golden-section line search until a full pass gains nothing.
    """
    j = np.asarray(j, dtype=float)
    a = float(alpha)
    if j.shape[0] > MAX_BRUTE_QU:
        raise DomainError(
            f"brute force enumerates the simplex and supports q_u <= {MAX_BRUTE_QU}; "
            f"use sibson_mi for q_u = {j.shape[0]}"
        )
    grid = simplex_grid(j.shape[0], resolution)
    vals = naive_sibson_objective(j, grid, a)
    best = int(np.argmin(vals))
    q, fq = grid[best].copy(), float(vals[best])

    def obj(v):
        return float(naive_sibson_objective(j, v, a)[0])

    for _ in range(max_passes):
        start = fq
        for i, k in itertools.combinations(range(q.size), 2):
            total = q[i] + q[k]
            if total <= 0:
                continue

            def along(t, i=i, k=k, total=total):
                v = q.copy()
                v[i], v[k] = t, total - t
                return obj(v)

            t, ft = _line_min(along, 0.0, total)
            if ft < fq:
                q[i], q[k], fq = t, total - t, ft
        if start - fq <= 1e-15:
            break
    return max(fq, 0.0), q


# ---------------------------------------------------------------------------
# decoupling lemmas
# ---------------------------------------------------------------------------


def decoupling_check(j, h, alpha, slack=1e-10):
    """Evaluate both sides of the three decoupling inequalities by enumeration.

    sigma^2(u) is the Hoeffding value range(h(u, .))^2 / 4. For the Sibson
    inequality the joint-level parameter is the global range squared and the
    log-MGF term uses gamma^2(u) = sigma^2(u) under the Sibson minimizer.
    Returns one report per inequality; discrepancy is lhs - rhs.
    """
    j = np.asarray(j, dtype=float)
    h = np.asarray(h, dtype=float)
    a = float(alpha)
    prod, pu, pv = naive_product(j)
    lhs = abs(math.fsum((j * h).ravel()) - math.fsum((prod * h).ravel()))
    sig2 = (h.max(axis=1) - h.min(axis=1)) ** 2 / 4.0
    e_sig2 = math.fsum(pu * sig2)

    rows = [(u, j[u] / pu[u]) for u in range(j.shape[0]) if pu[u] > 0]
    d_cond = math.fsum(pu[u] * naive_renyi(r, pv, a) for u, r in rows)
    rhs_renyi = math.sqrt(2.0 * e_sig2 * d_cond / a)
    rhs_js = math.sqrt(2.0 * e_sig2 * naive_js(j, prod, a) / (a * (1.0 - a)))

    q_star = dv.sibson_minimizer(j, a)
    i_s = naive_sibson_objective(j, q_star, a)[0]
    big = (h.max() - h.min()) ** 2
    phi = math.log(math.fsum(q_star * np.exp(sig2)))
    rhs_sib = math.sqrt(max(2.0 * ((1.0 - a) * big + a * phi) * i_s / a, 0.0))

    out = []
    for name, rhs in (("renyi", rhs_renyi), ("js", rhs_js), ("sibson", rhs_sib)):
        out.append(_report(f"decoupling/{name}", [lhs - rhs], [0.0], slack, lhs=lhs, rhs=rhs))
    return out


# ---------------------------------------------------------------------------
# limits and identities
# ---------------------------------------------------------------------------

ALPHA_NEAR_ONE = 0.9999
ALPHA_NEAR_ZERO = 1e-4
RENYI_LIMIT_TOL = 1e-3
JS_LIMIT_TOL = 1e-2


def limit_suite(cfg, extra_joints=()):
    """Small- and large-alpha limits on random joints, relative to 1 + target.

    renyi(joint, product) at alpha -> 1 against MI, sibson_mi at alpha -> 1
    against MI, js / alpha at alpha -> 0 against MI and js / (1 - alpha) at
    alpha -> 1 against Lautum information.
    """
    hi, lo = ALPHA_NEAR_ONE, ALPHA_NEAR_ZERO
    errs = {"renyi->kl": [], "sibson->mi": [], "js/a->mi": [], "js/(1-a)->lautum": []}
    for j in list(random_joints(cfg)) + list(extra_joints):
        prod, _, _ = naive_product(j)
        mi = naive_mi(j)
        lt = naive_lautum(j)
        errs["renyi->kl"].append(_gap(dv.renyi(j.ravel(), prod.ravel(), hi), mi) / (1.0 + mi))
        errs["sibson->mi"].append(_gap(dv.sibson_mi(j, hi), mi) / (1.0 + mi))
        errs["js/a->mi"].append(_gap(dv.js_alpha(j.ravel(), prod.ravel(), lo) / lo, mi) / (1.0 + mi))
        if math.isinf(lt):
            errs["js/(1-a)->lautum"].append(_gap(dv.lautum(j), lt))
        else:
            errs["js/(1-a)->lautum"].append(_gap(dv.js_alpha(j.ravel(), prod.ravel(), hi) / (1.0 - hi), lt) / (1.0 + lt))
    tols = {"renyi->kl": RENYI_LIMIT_TOL, "sibson->mi": RENYI_LIMIT_TOL, "js/a->mi": JS_LIMIT_TOL,
            "js/(1-a)->lautum": JS_LIMIT_TOL}
    return [_report(f"limits/{k}", v, v, tols[k], metric="rel") for k, v in errs.items()]


def sibson_identity_residual(j, alpha):
    """|a KL(T||j) + (1-a) KL(T||q* x p_V) - (1-a) I_a^S| for the tilted joint T."""
    q_star = dv.sibson_minimizer(j, alpha)
    tilt = dv.tilted_joint(j, q_star, alpha)
    _, _, pv = naive_product(j)
    ref = np.outer(q_star, pv)
    lhs = alpha * naive_kl(tilt, j) + (1.0 - alpha) * naive_kl(tilt, ref)
    return abs(lhs - (1.0 - alpha) * dv.sibson_mi(j, alpha))


ALPHAS = tuple(round(0.1 * k, 1) for k in range(1, 10))


def sibson_suite(seed=0, count=50, identity_count=200, alphas=ALPHAS, resolution=0.02):
    rng = np.random.default_rng(seed)
    bf_val, bf_arg = [], []
    for _ in range(count):
        q = int(rng.integers(2, 4))
        j = rng.dirichlet(np.ones(q * q)).reshape(q, q)
        a = float(rng.choice(alphas))
        v, arg = sibson_bruteforce(j, a, resolution)
        bf_val.append(abs(v - dv.sibson_mi(j, a)))
        bf_arg.append(float(np.max(np.abs(arg - dv.sibson_minimizer(j, a)))))
    ident = []
    for _ in range(identity_count):
        qu, qv = (int(x) for x in rng.integers(2, 6, size=2))
        j = rng.dirichlet(np.ones(qu * qv)).reshape(qu, qv)
        ident.extend(sibson_identity_residual(j, a) for a in alphas)
    return [
        _report("sibson/bruteforce-value", bf_val, bf_val, 1e-5),
        _report("sibson/bruteforce-argmin", bf_arg, bf_arg, 1e-3),
        _report("sibson/tilted-identity", ident, ident, 1e-10),
    ]


def decoupling_suite(seed=0, count=1000, alphas=ALPHAS):
    rng = np.random.default_rng(seed)
    worst = {}
    for _ in range(count):
        qu, qv = (int(x) for x in rng.integers(2, 5, size=2))
        j = rng.dirichlet(np.ones(qu * qv)).reshape(qu, qv)
        h = rng.uniform(0.0, rng.uniform(0.5, 3.0), size=(qu, qv))
        for a in alphas:
            for rep in decoupling_check(j, h, a):
                worst.setdefault(rep.name, []).append(rep.max_abs)
    return [_report(name, v, [0.0], 1e-10, violations=int(sum(x > 1e-10 for x in v)))
            for name, v in sorted(worst.items())]


# ---------------------------------------------------------------------------
# Gaussian JS term by sampling
# ---------------------------------------------------------------------------

MC_CHUNK = 1_000_000


def js_quadrature_vs_mc(spec, alpha, n=1_000_000, seed=11, quad_order=64, n_se=3.0):
    """Importance-sampling estimate of the conditional Gaussian JS term.

    Samples come from the conditional joint of (Y, X) given Z and from the
    product of its marginals; log-densities are scipy's. The report passes
    when the quadrature value is within ``n_se`` standard errors.
    """
    a = float(alpha)
    n = int(n)
    cov = gm.chain_covariance(spec)
    cyx = cov[:2, :2] - np.outer(cov[:2, 2], cov[2, :2]) / cov[2, 2]
    prod = np.diag(np.diag(cyx))
    if np.linalg.det(cyx) <= 1e-14 * np.prod(np.diag(cyx)):
        raise gm.NumericalError("conditional covariance of (Y, X) given Z is singular")
    p_dist = stats.multivariate_normal(mean=[0.0, 0.0], cov=cyx)
    q_dist = stats.multivariate_normal(mean=[0.0, 0.0], cov=prod)
    children = np.random.SeedSequence(int(seed)).spawn(2)

    def sample_terms(dist, child, weight_first):
        rng = np.random.Generator(np.random.PCG64(child))
        vals = []
        for start in range(0, n, MC_CHUNK):
            size = min(MC_CHUNK, n - start)
            x = dist.rvs(size=size, random_state=rng).reshape(size, 2)
            lp, lq = p_dist.logpdf(x), q_dist.logpdf(x)
            lm = np.logaddexp(math.log(a) + lp, math.log1p(-a) + lq)
            vals.append((lp if weight_first else lq) - lm)
        v = np.concatenate(vals)
        return float(np.mean(v)), float(np.var(v, ddof=1)) / n

    m1, v1 = sample_terms(p_dist, children[0], True)
    m2, v2 = sample_terms(q_dist, children[1], False)
    estimate = a * m1 + (1.0 - a) * m2
    se = math.sqrt(a * a * v1 + (1.0 - a) ** 2 * v2)
    quad = gm.gaussian_js_term(spec, a, gm.gauss_hermite_rule(quad_order))
    diff = abs(quad - estimate)
    z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
    return _report(
        f"gaussian-js/alpha={a:g}", [diff], [z], n_se, metric="rel",
        quadrature=quad, monte_carlo=estimate, stderr=se, n=n, seed=int(seed),
    )


# ---------------------------------------------------------------------------
# full suite
# ---------------------------------------------------------------------------

GROUPS = ("limits", "sibson", "decoupling", "gaussian-js")


def _near_deterministic():
    # zero cells make the Lautum information infinite
    return [np.array([[0.5, 0.0], [0.0, 0.5]]), np.array([[0.3, 0.1, 0.0], [0.0, 0.2, 0.4]])]


def run_suite(seed=7, only=None, limit_count=100, sibson_count=50, identity_count=200,
              decoupling_count=1000, js_samples=1_000_000, alphas=ALPHAS):
    """Run the oracle groups named in ``only`` (all by default) in a fixed order."""
    chosen = GROUPS if not only else tuple(g for g in GROUPS if g in set(only))
    unknown = set(only or ()) - set(GROUPS)
    if unknown:
        raise DomainError(f"unknown oracle groups {sorted(unknown)}; choose from {list(GROUPS)}")
    reports = []
    for group in chosen:
        if group == "limits":
            cfg = RandomJointConfig((3, 3), seed, limit_count)
            reports += limit_suite(cfg, _near_deterministic())
        elif group == "sibson":
            reports += sibson_suite(seed, sibson_count, identity_count, alphas)
        elif group == "decoupling":
            reports += decoupling_suite(seed, decoupling_count, alphas)
        else:
            for spec, a in ((gm.EXAMPLE2, 0.5), (gm.EXAMPLE3, 0.3)):
                reports.append(js_quadrature_vs_mc(spec, a, js_samples, seed))
    return reports
