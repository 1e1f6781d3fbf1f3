"""Finite-alphabet Markov chains Y -> X -> Z.

Builds the joint tensor P(y, x, z) from a prior and two channel matrices,
computes exact 0-1 Bayes risks, and evaluates every divergence term the
excess-risk bounds need. Everything is exact enumeration; nothing is sampled
except the optional Dirichlet prior.
"""

from dataclasses import dataclass, field

import numpy as np

from . import divergences as dv
from .errors import ConsistencyError, DegenerateInputError, DimensionError, DomainError

ROW_ATOL = 1e-12
TENSOR_ATOL = 1e-11


def check_channel(w, name="channel"):
    """Validate a row-stochastic matrix; errors cite the first offending row."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or 0 in w.shape:
        raise DimensionError(f"{name} must be a non-empty matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        bad = int(np.argwhere(~np.isfinite(w) | (w < 0))[0][0])
        raise DomainError(f"{name} row {bad} has negative or non-finite entries")
    sums = w.sum(axis=1)
    off = np.abs(sums - 1.0) > ROW_ATOL
    if np.any(off):
        row = int(np.argmax(off))
        raise DomainError(f"{name} row {row} sums to {float(sums[row])!r}, not 1")
    return w


def qsc_matrix(q, eps):
    """q-ary symmetric channel: keep the symbol w.p. 1-eps, else move uniformly.

    Entry [y, x] is P(X = x | Y = y) for X = (Y + U) mod q. The closed
    interval eps in [0, 1] is accepted so that noiseless links can be modelled.
    """
    q = int(q)
    if q < 2:
        raise DomainError(f"alphabet size must be at least 2, got {q}")
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"crossover probability must lie in [0, 1], got {eps}")
    w = np.full((q, q), eps / (q - 1))
    np.fill_diagonal(w, 1.0 - eps)
    return w


def compose_channels(w1, w2):
    """Cascade of two channels (matrix product)."""
    w1 = check_channel(w1, "w1")
    w2 = check_channel(w2, "w2")
    if w1.shape[1] != w2.shape[0]:
        raise DimensionError(f"cannot cascade {w1.shape} into {w2.shape}")
    return check_channel(w1 @ w2, "composed channel")


@dataclass(frozen=True)
class MarkovChainSpec:
    """Prior on Y plus channels Y -> X (w1) and X -> Z (w2)."""

    prior: np.ndarray
    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        prior = dv.as_pmf(self.prior, "prior")
        if prior.ndim != 1:
            raise DimensionError("prior must be a vector")
        w1 = check_channel(self.w1, "w1")
        w2 = check_channel(self.w2, "w2")
        if prior.shape[0] != w1.shape[0]:
            raise DimensionError(f"prior has {prior.shape[0]} symbols but w1 has {w1.shape[0]} rows")
        if w1.shape[1] != w2.shape[0]:
            raise DimensionError(f"w1 has {w1.shape[1]} outputs but w2 has {w2.shape[0]} rows")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    @classmethod
    def qsc(cls, prior, eps1, eps2):
        q = len(prior)
        return cls(np.asarray(prior, dtype=float), qsc_matrix(q, eps1), qsc_matrix(q, eps2))

    @property
    def shape(self):
        return (self.w1.shape[0], self.w1.shape[1], self.w2.shape[1])


def chain_joint(spec):
    """Joint tensor t[y, x, z] = prior[y] w1[y, x] w2[x, z]."""
    return spec.prior[:, None, None] * spec.w1[:, :, None] * spec.w2[None, :, :]


def as_tensor(t):
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise DimensionError(f"joint tensor must be 3-dimensional, got shape {t.shape}")
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise DomainError("joint tensor has negative or non-finite entries")
    if abs(t.sum() - 1.0) > TENSOR_ATOL:
        raise DomainError(f"joint tensor sums to {float(t.sum())!r}, not 1")
    return t


def bayes_risk_01(joint2):
    """Minimum 0-1 risk guessing the row label from the column observation."""
    j = dv.as_joint(joint2)
    return float(max(0.0, 1.0 - j.max(axis=0).sum()))


def excess_risk_01(t):
    """L*(Y|Z) - L*(Y|X) under 0-1 loss."""
    t = as_tensor(t)
    gap = bayes_risk_01(t.sum(axis=1)) - bayes_risk_01(t.sum(axis=2))
    if gap < -1e-12:
        raise ConsistencyError(f"excess risk {gap!r} is negative; the tensor is not a Markov chain")
    return max(gap, 0.0)


@dataclass(frozen=True)
class DirichletConfig:
    q: int
    concentration: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if int(self.q) < 2:
            raise DomainError(f"alphabet size must be at least 2, got {self.q}")
        if not float(self.concentration) > 0:
            raise DomainError(f"Dirichlet concentration must be positive, got {self.concentration}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


def dirichlet_prior(cfg):
    """Symmetric Dirichlet draw via normalized Gamma variates; deterministic in cfg."""
    rng = np.random.Generator(np.random.PCG64(int(cfg.seed)))
    g = rng.standard_gamma(float(cfg.concentration), size=int(cfg.q))
    return g / g.sum()


@dataclass
class ChainConditionals:
    """Conditional laws of a joint tensor, cached in log form.

    Only z with P_Z(z) > 0 are kept. ``cond`` has shape (nz, qy, qx) and holds
    P(y, x | z); the marginals ``py_z`` and ``px_z`` have shapes (nz, qy) and
    (nz, qx).
    """

    pz: np.ndarray
    cond: np.ndarray
    py_z: np.ndarray
    px_z: np.ndarray
    log_cond: np.ndarray = field(repr=False)
    log_py_z: np.ndarray = field(repr=False)
    log_px_z: np.ndarray = field(repr=False)
    tensor: np.ndarray = field(repr=False)


def conditionals(t):
    t = as_tensor(t)
    pz_all = t.sum(axis=(0, 1))
    live = pz_all > 0
    if not np.any(live):
        raise DegenerateInputError("no z carries positive probability")
    pz = pz_all[live]
    cond = np.moveaxis(t[:, :, live], 2, 0) / pz[:, None, None]
    py_z = cond.sum(axis=2)
    px_z = cond.sum(axis=1)
    px_z = px_z / px_z.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        return ChainConditionals(
            pz=pz,
            cond=cond,
            py_z=py_z,
            px_z=px_z,
            log_cond=np.log(cond),
            log_py_z=np.log(py_z),
            log_px_z=np.log(px_z),
            tensor=t,
        )


@dataclass(frozen=True)
class DiscreteTerms:
    """Divergence terms entering the bounds for one alpha.

    renyi      E_{Y,Z}[D_alpha(P_{X|Y,Z} || P_{X|Z})]
    js         E_Z[JS_alpha(P_{Y,X|Z} || P_{Y|Z} P_{X|Z})]
    sibson     E_Z[I^S_alpha of P_{Y,X|Z}]
    mi_gap     I(X;Y) - I(Z;Y)
    lautum_gap L(X;Y) - L(Z;Y), the difference of unconditional Lautum informations
    cond_lautum E_Z[L(Y;X | Z=z)], the alpha -> 1 limit of js / (1 - alpha)
    """

    alpha: float
    renyi: float
    js: float
    sibson: float
    mi_gap: float
    lautum_gap: float
    cond_lautum: float


def _chunks(n, size):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


# Per-z blocks keep q = 200 temporaries near 100 MB.
_BLOCK_ELEMS = 2_000_000


def renyi_term(c, alpha):
    """Sum over (y, z) of P(y, z) D_alpha(P_{X|y,z} || P_{X|z})."""
    nz, qy, qx = c.cond.shape
    total = 0.0
    for sl in _chunks(nz, max(1, _BLOCK_ELEMS // (qy * qx))):
        log_rows = c.log_cond[sl] - np.where(c.py_z[sl] > 0, c.log_py_z[sl], 0.0)[:, :, None]
        log_ref = np.broadcast_to(c.log_px_z[sl][:, None, :], log_rows.shape)
        d = dv.renyi_from_logs(log_rows, log_ref, alpha)
        w = c.pz[sl, None] * c.py_z[sl]
        with np.errstate(invalid="ignore"):
            total += float(np.sum(np.where(w > 0, w * d, 0.0)))
    return total


def js_term(c, alpha):
    """Sum over z of P(z) JS_alpha(P_{Y,X|z} || P_{Y|z} P_{X|z})."""
    nz, qy, qx = c.cond.shape
    total = 0.0
    for sl in _chunks(nz, max(1, _BLOCK_ELEMS // (qy * qx))):
        p = c.cond[sl].reshape(-1, qy * qx)
        logp = c.log_cond[sl].reshape(-1, qy * qx)
        q = (c.py_z[sl][:, :, None] * c.px_z[sl][:, None, :]).reshape(-1, qy * qx)
        logq = (c.log_py_z[sl][:, :, None] + c.log_px_z[sl][:, None, :]).reshape(-1, qy * qx)
        total += float(np.dot(c.pz[sl], dv.js_from_logs(p, logp, q, logq, alpha)))
    return total


def sibson_term(c, alpha):
    """Sum over z of P(z) I^S_alpha(P_{Y,X|z}) with Y in the minimizer slot."""
    nz, qy, qx = c.cond.shape
    total = 0.0
    for sl in _chunks(nz, max(1, _BLOCK_ELEMS // (qy * qx))):
        total += float(np.dot(c.pz[sl], dv.sibson_from_logs(c.log_cond[sl], c.log_px_z[sl], alpha)))
    return total


def cond_lautum_term(c):
    nz, qy, qx = c.cond.shape
    q = (c.py_z[:, :, None] * c.px_z[:, None, :]).reshape(nz, -1)
    logq = (c.log_py_z[:, :, None] + c.log_px_z[:, None, :]).reshape(nz, -1)
    per_z = dv.kl_from_logs(q, logq, c.log_cond.reshape(nz, -1))
    live = c.pz > 0
    return float(np.sum(c.pz[live] * per_z[live]))


def mi_gap(t):
    """I(X;Y) - I(Z;Y), clipped at zero against rounding."""
    t = as_tensor(t)
    gap = dv.mutual_information(t.sum(axis=2)) - dv.mutual_information(t.sum(axis=1))
    return max(gap, 0.0)


def lautum_gap(t):
    t = as_tensor(t)
    lx = dv.lautum(t.sum(axis=2))
    lz = dv.lautum(t.sum(axis=1))
    if np.isinf(lx):
        return np.inf
    return lx - lz


def bound_terms_discrete(t, alpha):
    """All divergence terms for one alpha in (0, 1).

    ``t`` may be a joint tensor or a precomputed ``ChainConditionals``.
    Conditioning events of probability zero are skipped.
    """
    a = dv.check_alpha(alpha, unit=True)
    c = t if isinstance(t, ChainConditionals) else conditionals(t)
    return DiscreteTerms(
        alpha=a,
        renyi=renyi_term(c, a),
        js=js_term(c, a),
        sibson=sibson_term(c, a),
        mi_gap=mi_gap(c.tensor),
        lautum_gap=lautum_gap(c.tensor),
        cond_lautum=cond_lautum_term(c),
    )
