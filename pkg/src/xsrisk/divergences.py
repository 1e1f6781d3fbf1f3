"""Divergence functionals on finite alphabets.

All quantities are in nats. Distributions are plain numpy arrays: a pmf is a
nonnegative vector summing to one along its last axis, a joint pmf is a matrix
whose last two axes sum to one. Leading axes are treated as a batch, so
``renyi(P, Q, a)`` with ``P.shape == (k, n)`` returns ``k`` divergences.

Infinite divergences are returned as ``math.inf`` (or ``np.inf`` entries in
batched results), never as large finite sentinels.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConsistencyError, DegenerateInputError, DimensionError, DomainError

PMF_ATOL = 1e-12


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------


def as_pmf(p, name="pmf"):
    """Return ``p`` as a float array after checking it is a pmf along the last axis."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] == 0:
        raise DimensionError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    if np.any(arr < 0):
        raise DomainError(f"{name} has negative entries")
    total = arr.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > PMF_ATOL):
        worst = float(np.max(np.abs(total - 1.0)))
        raise DomainError(f"{name} does not sum to 1 (max deviation {worst:.3e})")
    return arr


def as_joint(j, name="joint"):
    """Return ``j`` as a float array after checking its last two axes form a joint pmf."""
    arr = np.asarray(j, dtype=float)
    if arr.ndim < 2 or arr.shape[-1] == 0 or arr.shape[-2] == 0:
        raise DimensionError(f"{name} must be a non-empty matrix")
    as_pmf(_flat2(arr), name)
    return arr


def renormalize(p):
    """Scale a nonnegative array so its last axis sums to one.

    Validating functions never renormalize on their own; call this explicitly
    when an input is known to be off by rounding.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0):
        raise DomainError("cannot renormalize negative entries")
    total = arr.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise DegenerateInputError("cannot renormalize an all-zero vector")
    return arr / total


def check_alpha(alpha, unit=False):
    """Validate an order parameter.

    ``unit=True`` demands ``alpha`` in the open interval (0, 1), as required by
    the alpha-JS divergence, tilting and every bound formula. Otherwise any
    positive order other than 1 is accepted.
    """
    a = float(alpha)
    if not math.isfinite(a) or a <= 0.0:
        raise DomainError(f"order alpha must be positive and finite, got {alpha!r}")
    if unit and a >= 1.0:
        raise DomainError(f"order alpha must lie in (0, 1), got {alpha!r}")
    if a == 1.0:
        raise DomainError("order alpha = 1 is the KL limit; use kl() instead")
    return a


def binary_entropy(alpha):
    """H_b(alpha) in nats; the supremum of the alpha-JS divergence."""
    a = float(alpha)
    if a <= 0.0 or a >= 1.0:
        return 0.0
    return -a * math.log(a) - (1.0 - a) * math.log1p(-a)


def _flat2(a):
    return a.reshape(a.shape[:-2] + (-1,))


def _same_last_dim(p, q):
    if p.shape[-1] != q.shape[-1]:
        raise DimensionError(f"alphabet sizes differ: {p.shape[-1]} vs {q.shape[-1]}")


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


# ---------------------------------------------------------------------------
# log-domain kernels (no validation; shared with the model modules)
# ---------------------------------------------------------------------------


def kl_from_logs(p, logp, logq):
    """sum p (log p - log q) along the last axis, with 0 log 0 = 0."""
    with np.errstate(invalid="ignore"):
        terms = np.where(p > 0, p * (logp - logq), 0.0)
    return np.maximum(terms.sum(axis=-1), 0.0)


def renyi_from_logs(logp, logq, alpha):
    """(1/(alpha-1)) log sum p^alpha q^(1-alpha) from log-probabilities."""
    both = np.isfinite(logp) & np.isfinite(logq)
    with np.errstate(invalid="ignore"):
        terms = np.where(both, alpha * logp + (1.0 - alpha) * logq, -np.inf)
    with np.errstate(divide="ignore"):
        lse = logsumexp(terms, axis=-1)
    value = lse / (alpha - 1.0)
    if alpha > 1.0:
        violation = np.any(np.isfinite(logp) & ~np.isfinite(logq), axis=-1)
        value = np.where(violation, np.inf, value)
    return np.maximum(value, 0.0)


def js_from_logs(p, logp, q, logq, alpha):
    """alpha-JS divergence given both pmfs and their logs."""
    with np.errstate(divide="ignore"):
        logm = np.logaddexp(math.log(alpha) + logp, math.log1p(-alpha) + logq)
    # the mixture of equal masses is that mass; avoids rounding residue
    logm = np.where(logp == logq, logp, logm)
    value = alpha * kl_from_logs(p, logp, logm) + (1.0 - alpha) * kl_from_logs(q, logq, logm)
    return np.maximum(value, 0.0)


def sibson_row_logs(logj, logpv, alpha):
    """Per-row log of (sum_v j(u,v)^alpha pV(v)^(1-alpha))^(1/alpha).

    Up to normalization this is the log of the Sibson minimizer; rows of
    ``logj`` that are entirely -inf yield -inf.
    """
    # factor out the row maximum so a row concentrated on one v returns it exactly
    finite = np.isfinite(logj)
    top = np.max(np.where(finite, logj, -np.inf), axis=-1, keepdims=True)
    shift = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(invalid="ignore"):
        terms = np.where(finite, alpha * (logj - shift) + (1.0 - alpha) * logpv[..., None, :], -np.inf)
    with np.errstate(divide="ignore"):
        return shift[..., 0] + logsumexp(terms, axis=-1) / alpha


def sibson_from_logs(logj, logpv, alpha):
    """Sibson mutual information of order alpha from log joint and log V-marginal."""
    g = sibson_row_logs(logj, logpv, alpha)
    with np.errstate(divide="ignore"):
        lse = logsumexp(g, axis=-1)
        # subtract log of the total mass (exactly 1 in theory) so that joints
        # with deterministic rows give exactly zero
        mass = logsumexp(logsumexp(logj, axis=-1), axis=-1)
    return np.maximum(alpha / (alpha - 1.0) * (lse - mass), 0.0)


# ---------------------------------------------------------------------------
# public divergences
# ---------------------------------------------------------------------------


def kl(p, q):
    """KL divergence D(p || q); +inf when p puts mass where q has none."""
    p = as_pmf(p, "p")
    q = as_pmf(q, "q")
    _same_last_dim(p, q)
    return _out(kl_from_logs(p, _log(p), _log(q)))


def renyi(p, q, alpha):
    """Renyi divergence of order ``alpha`` (any positive order except 1)."""
    a = check_alpha(alpha)
    p = as_pmf(p, "p")
    q = as_pmf(q, "q")
    _same_last_dim(p, q)
    return _out(renyi_from_logs(_log(p), _log(q), a))


def js_alpha(p, q, alpha):
    """alpha-Jensen-Shannon divergence.

    alpha * KL(p || m) + (1 - alpha) * KL(q || m) with m = alpha p + (1 - alpha) q.
    Always finite and bounded by ``binary_entropy(alpha)``.
    """
    a = check_alpha(alpha, unit=True)
    p = as_pmf(p, "p")
    q = as_pmf(q, "q")
    _same_last_dim(p, q)
    return _out(js_from_logs(p, _log(p), q, _log(q), a))


@dataclass(frozen=True)
class ConditionalKernel:
    """A stochastic kernel P(v | u) together with the weight P(u) it is averaged under."""

    rows: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        rows = as_pmf(self.rows, "kernel rows")
        weight = as_pmf(self.weight, "kernel weight")
        if rows.ndim != 2 or weight.ndim != 1:
            raise DimensionError("kernel rows must be a matrix and weight a vector")
        if rows.shape[0] != weight.shape[0]:
            raise DimensionError(f"{rows.shape[0]} rows but {weight.shape[0]} weights")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "weight", weight)


def _check_kernels(pk, qk):
    if pk.rows.shape != qk.rows.shape:
        raise DimensionError(f"kernel shapes differ: {pk.rows.shape} vs {qk.rows.shape}")
    if not np.array_equal(pk.weight, qk.weight):
        raise DimensionError("kernels must share the same conditioning weight")


def _weighted(weight, values):
    live = weight > 0
    return float(np.sum(weight[live] * values[live]))


def cond_renyi(p_kernel, q_kernel, alpha):
    """Weight-averaged Renyi divergence between two kernels.

    This is E_u[D_alpha(P(.|u) || Q(.|u))], not the joint-lifted conditional
    Renyi divergence; rows with zero weight are skipped.
    """
    a = check_alpha(alpha)
    _check_kernels(p_kernel, q_kernel)
    per_row = renyi_from_logs(_log(p_kernel.rows), _log(q_kernel.rows), a)
    return _weighted(p_kernel.weight, per_row)


def cond_js(p_kernel, q_kernel, alpha):
    """Weight-averaged alpha-JS divergence between two kernels."""
    a = check_alpha(alpha, unit=True)
    _check_kernels(p_kernel, q_kernel)
    p, q = p_kernel.rows, q_kernel.rows
    per_row = js_from_logs(p, _log(p), q, _log(q), a)
    return _weighted(p_kernel.weight, per_row)


def marginals(j):
    """(P_U, P_V) of a joint pmf (rows index U)."""
    return j.sum(axis=-1), j.sum(axis=-2)


def product_of_marginals(j):
    pu, pv = marginals(j)
    return pu[..., :, None] * pv[..., None, :]


def mutual_information(j):
    """I(U; V) = KL(P_UV || P_U P_V)."""
    j = as_joint(j)
    return _out(kl_from_logs(_flat2(j), _log(_flat2(j)), _log(_flat2(product_of_marginals(j)))))


def lautum(j):
    """Lautum information KL(P_U P_V || P_UV); +inf if the joint has holes."""
    j = as_joint(j)
    prod = _flat2(product_of_marginals(j))
    return _out(kl_from_logs(prod, _log(prod), _log(_flat2(j))))


def sibson_minimizer(j, alpha, full_output=False):
    """Distribution Q_U minimizing D_alpha(P_UV || Q_U P_V).

    Rows of ``j`` with no mass get probability zero; their indices are listed
    under ``"zero_rows"`` in the info dict returned when ``full_output`` is set.
    """
    a = check_alpha(alpha)
    j = as_joint(j)
    _, pv = marginals(j)
    g = sibson_row_logs(_log(j), _log(pv), a)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = g - logsumexp(g, axis=-1, keepdims=True)
    probs = np.exp(logp)
    if not full_output:
        return probs
    zero_rows = np.argwhere(~np.isfinite(g))
    return probs, {"zero_rows": [tuple(int(i) for i in idx) for idx in zero_rows]}


def _sibson_closed_form(j, a):
    # literal form: (a/(a-1)) log sum_u pU(u) (sum_v pV|U(v|u)^a pV(v)^(1-a))^(1/a)
    pu, pv = marginals(j)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_cond = _log(j) - _log(pu)[..., :, None]
    log_cond = np.where(j > 0, log_cond, -np.inf)
    inner = sibson_row_logs(log_cond, _log(pv), a)
    with np.errstate(invalid="ignore"):
        outer = np.where(pu > 0, _log(pu) + inner, -np.inf)
    return np.maximum(a / (a - 1.0) * logsumexp(outer, axis=-1), 0.0)


def _sibson_via_minimizer(j, a):
    _, pv = marginals(j)
    qstar = sibson_minimizer(j, a)
    ref = qstar[..., :, None] * pv[..., None, :]
    return renyi_from_logs(_log(_flat2(j)), _log(_flat2(ref)), a)


def sibson_mi(j, alpha, cross_check=False):
    """Sibson mutual information I^S_alpha(U; V).

    Evaluated in closed form. With ``cross_check=True`` the value is also
    computed as D_alpha(P_UV || Q* P_V) through the explicit minimizer and a
    ConsistencyError is raised if the two disagree beyond 1e-10 (relative to
    max(1, value)).
    """
    a = check_alpha(alpha)
    j = as_joint(j)
    value = _sibson_closed_form(j, a)
    if cross_check:
        other = _sibson_via_minimizer(j, a)
        gap = np.abs(value - other)
        if np.any(gap > 1e-10 * np.maximum(1.0, np.abs(value))):
            raise ConsistencyError(f"Sibson routes disagree by {float(np.max(gap)):.3e}")
    return _out(value)


def tilted_joint(j, u_star, alpha):
    """Tilt j toward u_star x P_V: entries proportional to j^alpha (u_star pV)^(1-alpha)."""
    a = check_alpha(alpha, unit=True)
    j = as_joint(j)
    u_star = as_pmf(u_star, "u_star")
    if j.ndim != 2:
        raise DimensionError("tilted_joint takes a single joint matrix")
    if u_star.shape != (j.shape[0],):
        raise DimensionError(f"u_star has length {u_star.shape[-1]}, joint has {j.shape[0]} rows")
    _, pv = marginals(j)
    log_ref = _log(u_star)[:, None] + _log(pv)[None, :]
    with np.errstate(invalid="ignore"):
        logn = np.where((j > 0) & np.isfinite(log_ref), a * _log(j) + (1.0 - a) * log_ref, -np.inf)
    with np.errstate(divide="ignore"):
        lse = logsumexp(logn)
    if not np.isfinite(lse):
        raise DegenerateInputError("tilted numerator vanishes everywhere")
    return np.exp(logn - lse)
