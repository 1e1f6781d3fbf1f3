"""Scalar Gaussian additive-noise chains and the clamped absolute loss.

Two constructions share one covariance model:

* forward:  Y ~ N(0, s),  X = Y + W1,  Z = X + W2
* reverse:  Z ~ N(0, s),  X = Z + W1,  Y = X + W2

with W1 ~ N(0, s1), W2 ~ N(0, s2). Both are Markov chains Y -> X -> Z, so the
bound ingredients are computed from the (Y, X, Z) covariance alone.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, NumericalError

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
MIN_QUAD_ORDER = 8


class Direction(enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class GaussianChainSpec:
    var_input: float
    var_n1: float
    var_n2: float
    direction: Direction = Direction.FORWARD

    def __post_init__(self):
        for name in ("var_input", "var_n1", "var_n2"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a positive variance, got {v!r}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "direction", Direction(self.direction))


EXAMPLE2 = GaussianChainSpec(1.0, 1.0, 1.0, Direction.FORWARD)
EXAMPLE3 = GaussianChainSpec(2.0, 39.0, 1.0, Direction.REVERSE)


@dataclass(frozen=True)
class ClampedAbsLoss:
    """l(y, a) = min(|y - a|, |y - c|)."""

    c: float

    def __post_init__(self):
        if not float(self.c) > 0:
            raise DomainError(f"loss radius c must be positive, got {self.c!r}")

    def __call__(self, y, a):
        y = np.asarray(y, dtype=float)
        return np.minimum(np.abs(y - a), np.abs(y - self.c))

    def sigma2(self, y):
        """Hoeffding parameter for a loss bounded by |y| + c."""
        return (np.abs(y) + self.c) ** 2 / 4.0


def chain_covariance(spec):
    """3x3 covariance of (Y, X, Z)."""
    s, s1, s2 = spec.var_input, spec.var_n1, spec.var_n2
    if spec.direction is Direction.FORWARD:
        vy, vx, vz = s, s + s1, s + s1 + s2
        return np.array([[vy, vy, vy], [vy, vx, vx], [vy, vx, vz]])
    vz, vx, vy = s, s + s1, s + s1 + s2
    return np.array([[vy, vx, vz], [vx, vx, vz], [vz, vz, vz]])


def _rho2(cov, i, j):
    return cov[i, j] ** 2 / (cov[i, i] * cov[j, j])


def gaussian_mi_gap(spec):
    """I(X;Y) - I(Z;Y) from correlation coefficients."""
    cov = chain_covariance(spec)
    gap = -0.5 * math.log1p(-_rho2(cov, 0, 1)) + 0.5 * math.log1p(-_rho2(cov, 0, 2))
    return max(gap, 0.0)


def expected_sigma2(loss, var_y):
    """E[(|Y| + c)^2 / 4] for Y ~ N(0, var_y)."""
    var_y = float(var_y)
    if not var_y > 0:
        raise DomainError(f"var_y must be positive, got {var_y!r}")
    c = float(loss.c)
    return (var_y + c * c + 2.0 * c * math.sqrt(2.0 * var_y / math.pi)) / 4.0


def conditional_variances(spec):
    """(Var(X | Y, Z), Var(X | Z))."""
    cov = chain_covariance(spec)
    yz = [0, 2]
    s_yz = cov[np.ix_(yz, yz)]
    s_x_yz = cov[1, yz]
    v1 = cov[1, 1] - s_x_yz @ np.linalg.solve(s_yz, s_x_yz)
    v2 = cov[1, 1] - cov[1, 2] ** 2 / cov[2, 2]
    return float(v1), float(v2)


def gaussian_renyi_term(spec, alpha):
    """E_{Y,Z}[D_alpha(P_{X|Y,Z} || P_{X|Z})] in closed form.

    Both conditionals are normal with variances v1 <= v2; their mean gap is a
    zero-mean linear function of (y, z) with second moment v2 - v1, so the
    average of the Gaussian Renyi formula is explicit.
    """
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    v1, v2 = conditional_variances(spec)
    v_mix = a * v2 + (1.0 - a) * v1
    if not v_mix > 0:
        raise NumericalError(f"mixed variance {v_mix!r} is not positive")
    mean_part = a * (v2 - v1) / (2.0 * v_mix)
    var_part = (math.log(v_mix) - (1.0 - a) * math.log(v1) - a * math.log(v2)) / (2.0 * (1.0 - a))
    return max(mean_part + var_part, 0.0)


def conditional_correlation(spec):
    """Correlation of (Y, X) given Z; the same for every z."""
    cov = chain_covariance(spec)
    a = _conditional_yx_cov(cov)
    return float(a[0, 1] / math.sqrt(a[0, 0] * a[1, 1]))


def _conditional_yx_cov(cov):
    return cov[:2, :2] - np.outer(cov[:2, 2], cov[2, :2]) / cov[2, 2]


def gaussian_cond_lautum(spec):
    """E_Z[KL(P_{Y|Z} P_{X|Z} || P_{Y,X|Z})] = rho^2/(1-rho^2) + log(1-rho^2)/2."""
    r2 = conditional_correlation(spec) ** 2
    return max(r2 / (1.0 - r2) + 0.5 * math.log1p(-r2), 0.0)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for expectations under N(0, 1); weights sum to one."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def expect(self, f):
        return float(np.dot(self.weights, f(self.nodes)))


def gauss_hermite_rule(order=64):
    order = int(order)
    if order < MIN_QUAD_ORDER:
        raise DomainError(f"quadrature order must be at least {MIN_QUAD_ORDER}, got {order}")
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    return QuadratureRule(nodes, weights / weights.sum(), order)


def _js_integrands(d, alpha):
    """Integrands under P for the two halves of JS_alpha, given d = log p - log q.

    The Q-expectation of log(q/m) is rewritten as -log(1 - alpha) minus the
    P-expectation of exp(-d) log1p(k exp(d)), k = alpha/(1 - alpha). Both
    integrands are then smooth in P-whitened coordinates even when p and q
    have very different shapes.
    """
    k = alpha / (1.0 - alpha)
    first = -np.logaddexp(math.log(alpha), math.log1p(-alpha) - d)
    x = k * np.exp(np.minimum(d, 700.0))
    with np.errstate(over="ignore"):
        phi = np.where(
            x < 1e-8,
            k * (1.0 - 0.5 * x),
            np.logaddexp(0.0, math.log(k) + d) * np.exp(-np.maximum(d, math.log(1e-8 / k))),
        )
    return first, phi


def _js_from_d(d, w2, alpha):
    first, phi = _js_integrands(d, alpha)
    e_first = float(np.sum(w2 * first))
    e_phi = float(np.sum(w2 * phi))
    value = alpha * e_first + (1.0 - alpha) * (-math.log1p(-alpha) - e_phi)
    return max(value, 0.0)


def _tensor_rule(rule):
    s, t = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    w2 = np.outer(rule.weights, rule.weights)
    return s, t, w2


def _check_unit_alpha(alpha):
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return a


def gaussian_js_term(spec, alpha, rule=None):
    """E_Z[JS_alpha(P_{Y,X|Z} || P_{Y|Z} P_{X|Z})] by 2-D Gauss-Hermite quadrature.

    The conditional law of (Y, X) given Z = z has a z-free covariance and both
    arguments share the same mean, so the term is the JS divergence between a
    centred bivariate normal with correlation rho and the product of its
    marginals. In the eigenbasis of the correlation matrix the log-density
    ratio is rho (s^2 - t^2)/2 - log(1 - rho^2)/2 for standard normal (s, t).
    """
    a = _check_unit_alpha(alpha)
    rule = rule or gauss_hermite_rule()
    if rule.order < MIN_QUAD_ORDER:
        raise DomainError(f"quadrature order must be at least {MIN_QUAD_ORDER}")
    rho = conditional_correlation(spec)
    if rho == 0.0:
        return 0.0
    s, t, w2 = _tensor_rule(rule)
    d = 0.5 * abs(rho) * (s * s - t * t) - 0.5 * math.log1p(-rho * rho)
    return _js_from_d(d, w2, a)


def _bivariate_logpdf(x, mean, cov):
    diff = x - mean
    prec = np.linalg.inv(cov)
    quad = np.einsum("...i,ij,...j->...", diff, prec, diff)
    return -0.5 * quad - 0.5 * math.log(np.linalg.det(cov)) - math.log(2.0 * math.pi)


def conditional_js_at(spec, alpha, z, rule=None):
    """JS_alpha(P_{Y,X|Z=z} || P_{Y|Z=z} P_{X|Z=z}) evaluated at one z.

    Generic path: nodes are placed at the actual conditional mean and both
    densities are evaluated in (y, x) coordinates. Used to confirm that the
    term does not depend on z.
    """
    a = _check_unit_alpha(alpha)
    rule = rule or gauss_hermite_rule()
    cov = chain_covariance(spec)
    mean = cov[:2, 2] / cov[2, 2] * float(z)
    cyx = _conditional_yx_cov(cov)
    prod = np.diag(np.diag(cyx))
    s, t, w2 = _tensor_rule(rule)
    chol = np.linalg.cholesky(cyx)
    pts = mean + np.stack([s, t], axis=-1) @ chol.T
    d = _bivariate_logpdf(pts, mean, cyx) - _bivariate_logpdf(pts, mean, prod)
    return _js_from_d(d, w2, a)


# ---------------------------------------------------------------------------
# Monte Carlo risk oracle
# ---------------------------------------------------------------------------


def _partial_below(m, s, b, tau):
    # E[(Y - b) 1{Y < m + s tau}] for Y ~ N(m, s^2)
    return (m - b) * ndtr(tau) - s * np.exp(-0.5 * tau * tau) / math.sqrt(2.0 * math.pi)


def _partial_above(m, s, b, tau):
    # E[(Y - b) 1{Y >= m + s tau}]
    return (m - b) * ndtr(-tau) + s * np.exp(-0.5 * tau * tau) / math.sqrt(2.0 * math.pi)


def expected_clamped_loss(mean, sd, action, c):
    """E[min(|Y - a|, |Y - c|)] for Y ~ N(mean, sd^2), exact.

    The loss is |y - lo| left of the midpoint of a and c and |y - hi| right of
    it, so the expectation splits into Gaussian partial moments.
    """
    m = np.asarray(mean, dtype=float)
    a = np.asarray(action, dtype=float)
    lo = np.minimum(a, c)
    hi = np.maximum(a, c)
    mid = 0.5 * (lo + hi)
    t_lo, t_mid, t_hi = (lo - m) / sd, (mid - m) / sd, (hi - m) / sd
    left = _partial_below(m, sd, lo, t_mid) - 2.0 * _partial_below(m, sd, lo, t_lo)
    right = -_partial_above(m, sd, hi, t_mid) + 2.0 * _partial_above(m, sd, hi, t_hi)
    return left + right


def expected_clamped_loss_gh(mean, sd, action, c, rule):
    """Same expectation by Gauss-Hermite quadrature (for cross-checks)."""
    m = np.asarray(mean, dtype=float)[..., None]
    a = np.asarray(action, dtype=float)[..., None]
    y = m + sd * rule.nodes
    loss = np.minimum(np.abs(y - a), np.abs(y - c))
    return loss @ rule.weights


_GRID_POINTS = 33
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _inner(m, sd, a, c, rule):
    if rule is None:
        return expected_clamped_loss(m, sd, a, c)
    return expected_clamped_loss_gh(m, sd, a, c, rule)


def optimal_clamped_risk(mean, sd, c, rule=None, tol=1e-9, max_iter=200):
    """min_a E[min(|Y - a|, |Y - c|)] for Y ~ N(mean, sd^2), elementwise in ``mean``.

    The objective is not convex in a, so a coarse grid over
    [mean - 6 sd, mean + 6 sd] plus the candidate a = c picks the basin, and a
    vectorized golden-section search refines within one grid step either side
    of the best grid point. ``rule`` switches the inner expectation from the
    exact formula to Gauss-Hermite quadrature.
    """
    m = np.asarray(mean, dtype=float)
    offsets = np.linspace(-6.0, 6.0, _GRID_POINTS) * sd
    grid = m[..., None] + offsets
    vals = _inner(m[..., None], sd, grid, c, rule)
    best = np.argmin(vals, axis=-1)
    a_best = np.take_along_axis(grid, best[..., None], axis=-1)[..., 0]
    f_best = np.take_along_axis(vals, best[..., None], axis=-1)[..., 0]
    f_c = _inner(m, sd, np.full_like(m, c), c, rule)

    step = offsets[1] - offsets[0]
    lo, hi = a_best - step, a_best + step
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = _inner(m, sd, x1, c, rule)
    f2 = _inner(m, sd, x2, c, rule)
    width_tol = tol * max(sd, 1.0)
    for _ in range(max_iter):
        if np.max(hi - lo) <= width_tol:
            break
        left = f1 <= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        new_x = np.where(left, hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo))
        new_f = _inner(m, sd, new_x, c, rule)
        x1, x2 = np.where(left, new_x, x2), np.where(left, x1, new_x)
        f1, f2 = np.where(left, new_f, f2), np.where(left, f1, new_f)
    else:
        raise NumericalError(
            f"golden-section search stopped at width {float(np.max(hi - lo)):.3e}, "
            f"tolerance {width_tol:.3e}, after {max_iter} iterations"
        )
    return np.minimum(np.minimum(np.minimum(f1, f2), f_best), f_c)


@dataclass(frozen=True)
class MCRiskEstimate:
    """Monte Carlo estimate of L*(Y|Z) - L*(Y|X) with its standard error."""

    excess: float
    stderr: float
    risk_x: float
    risk_x_se: float
    risk_z: float
    risk_z_se: float
    n: int
    seed: int


MC_CHUNK = 65_536
MIN_MC_SAMPLES = 10_000


def _posterior(cov, idx):
    # Y | observation idx is N(k * obs, var)
    k = cov[0, idx] / cov[idx, idx]
    return k, cov[0, 0] - k * cov[0, idx]


def mc_excess_risk_clamped(spec, loss, n, seed, quad_order=None):
    """Monte Carlo oracle for the true excess minimum risk under the clamped loss.

    Observations (X, Z) are sampled jointly; for each one the posterior of Y is
    normal, so its minimum conditional risk is computed deterministically and
    only the outer average is random. Chunks draw from child seeds of one
    ``SeedSequence`` so the result depends only on (n, seed, quad_order).
    """
    n = int(n)
    if n < MIN_MC_SAMPLES:
        raise DomainError(f"need at least {MIN_MC_SAMPLES} samples, got {n}")
    rule = None if quad_order is None else gauss_hermite_rule(quad_order)
    cov = chain_covariance(spec)
    chol_xz = np.linalg.cholesky(cov[1:, 1:])
    kx, vx = _posterior(cov, 1)
    kz, vz = _posterior(cov, 2)
    sx, sz = math.sqrt(max(vx, 0.0)), math.sqrt(max(vz, 0.0))
    c = float(loss.c)

    n_chunks = -(-n // MC_CHUNK)
    children = np.random.SeedSequence(int(seed)).spawn(n_chunks)
    rx, rz, rd = [], [], []
    for i, child in enumerate(children):
        size = min(MC_CHUNK, n - i * MC_CHUNK)
        rng = np.random.Generator(np.random.PCG64(child))
        xz = rng.standard_normal((size, 2)) @ chol_xz.T
        risk_x = optimal_clamped_risk(kx * xz[:, 0], sx, c, rule)
        risk_z = optimal_clamped_risk(kz * xz[:, 1], sz, c, rule)
        rx.append(risk_x)
        rz.append(risk_z)
        rd.append(risk_z - risk_x)
    rx, rz, rd = (np.concatenate(v) for v in (rx, rz, rd))

    def mean_se(v):
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size))

    excess, se = mean_se(rd)
    mx, sex = mean_se(rx)
    mz, sez = mean_se(rz)
    return MCRiskEstimate(excess, se, mx, sex, mz, sez, n, int(seed))
