"""Partially linear additive cumulative-logit model.

    logit P(Y <= c) = theta_c - eta
    eta = s1(mean_amp) + s2(rsd_amp) + s3(mean_int) + s4(rsd_int)
          + beta1 * fatigue + sum_k gamma_k * I(arrest = k),   gamma_0 = 0

Larger ``eta`` shifts mass to higher scores.  The usual intercept is absorbed
into the ordered thresholds ``theta_0 < theta_1 < theta_2``.

Each smooth is a cubic B-spline (10 basis functions, equally spaced knots
over the observed range) with a second-difference penalty, reparametrized so
that its fitted values have sample mean zero.  Fitting is cyclic
backfitting on the penalized log-likelihood: a Newton step on the parametric
block (thresholds, fatigue, arrest contrasts), then one penalized
weighted-least-squares step per smooth on the working residuals.  Every step
is safeguarded by step halving, so the penalized log-likelihood never
decreases from one cycle to the next.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats
from scipy.interpolate import BSpline
from scipy.special import expit, log_expit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import DegenerateDataset, NonConvergence, SeparationDetected

N_LEVELS = 4
SMOOTH_NAMES = ("mean_amp", "rsd_amp", "mean_int", "rsd_int")
LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
# runaway detection: minimum size, per-cycle movement and run length
DRIFT_COEF = 20.0
DRIFT_STEP = 0.5
DRIFT_CYCLES = 5


@dataclass(frozen=True)
class PlamConfig:
    n_basis: int = 10
    degree: int = 3
    lam: float = 1.0
    lambda_grid: Optional[tuple] = None
    cv_folds: int = 5
    tol: float = 1e-6
    max_cycles: int = 200
    clamp: float = 1e3
    seed: int = 0


@dataclass
class SmoothTerm:
    name: str
    lo: float
    hi: float
    knots: Optional[np.ndarray]
    coef: np.ndarray  # B-spline coefficients, length n_basis (zeros if inactive)
    offset: float  # subtracted so the training-sample mean is zero
    lam: float

    @property
    def active(self) -> bool:
        return self.knots is not None

    def basis(self, x, degree=3) -> np.ndarray:
        xc = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        return BSpline.design_matrix(xc, self.knots, degree).toarray()

    def __call__(self, x, degree=3) -> np.ndarray:
        if not self.active:
            return np.zeros(len(np.atleast_1d(x)))
        return self.basis(x, degree) @ self.coef - self.offset


@dataclass
class PlamModel:
    thresholds: np.ndarray  # (3,)
    smooths: list
    beta1: float
    gamma: np.ndarray  # (4,), gamma[0] == 0
    free_params: tuple  # names of parametric coefficients that were estimated
    n_cycles: int
    converged: bool
    history: list  # penalized log-likelihood after each cycle
    separation: bool = False
    degree: int = 3

    @property
    def lambdas(self):
        return [s.lam for s in self.smooths]

    def linear_predictor(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        eta = sum(s(X[:, j], self.degree) for j, s in enumerate(self.smooths))
        eta = eta + self.beta1 * X[:, 4]
        return eta + self.gamma[X[:, 5].astype(int)]

    def predict_cumulative(self, X) -> np.ndarray:
        eta = self.linear_predictor(X)
        return expit(self.thresholds[None, :] - eta[:, None])

    def predict_proba(self, X) -> np.ndarray:
        cum = self.predict_cumulative(X)
        full = np.hstack([np.zeros((len(cum), 1)), cum, np.ones((len(cum), 1))])
        return np.diff(full, axis=1)

    def summary(self) -> dict:
        return {
            "thresholds": [float(t) for t in self.thresholds],
            "intercept_note": "beta0 is absorbed into the thresholds: theta_c - beta0",
            "beta1_fatigue": float(self.beta1),
            "gamma_arrest": [float(g) for g in self.gamma],
            "lambda": self.lambdas,
            "cycles": self.n_cycles,
            "converged": self.converged,
            "separation": self.separation,
        }


# -- ordinal likelihood ------------------------------------------------------


def _bounds(theta, y, eta):
    ext = np.concatenate([[-np.inf], theta, [np.inf]])
    return ext[y + 1] - eta, ext[y] - eta


def _log_prob(u, l):
    """log(sigmoid(u) - sigmoid(l)) for u > l, stable in both tails."""
    out = np.empty_like(u)
    pos = l > 0
    # upper tail: 1 - F(l) dominates; use complements
    a, b = -l[pos], -u[pos]
    out[pos] = log_expit(a) + np.log(-np.expm1(log_expit(b) - log_expit(a)))
    a, b = u[~pos], l[~pos]
    out[~pos] = log_expit(a) + np.log(-np.expm1(log_expit(b) - log_expit(a)))
    return out


def ordinal_loglik(theta, eta, y) -> float:
    if np.any(np.diff(theta) <= 0):
        return -np.inf
    u, l = _bounds(theta, y, eta)
    return float(_log_prob(u, l).sum())


def _derivs(theta, eta, y):
    """First and second derivatives of log p w.r.t. the bounds (u, l)."""
    u, l = _bounds(theta, y, eta)
    Fu, Fl = expit(u), expit(l)
    fu, fl = Fu * (1 - Fu), Fl * (1 - Fl)
    p = np.exp(_log_prob(u, l))
    p = np.maximum(p, 1e-300)
    du, dl = fu / p, -fl / p
    huu = fu * (1 - 2 * Fu) / p - du * du
    hll = -fl * (1 - 2 * Fl) / p - dl * dl
    hul = -du * dl
    return du, dl, huu, hll, hul


# -- design ------------------------------------------------------------------


def _knots(lo, hi, n_basis, degree):
    inner = np.linspace(lo, hi, n_basis - degree + 1)
    return np.concatenate([[lo] * degree, inner, [hi] * degree])


def _diff_penalty(n):
    D = np.diff(np.eye(n), 2, axis=0)
    return D.T @ D


@dataclass
class _Block:
    X: np.ndarray  # constrained design (n, m)
    Z: np.ndarray  # basis -> constrained map (n_basis, m)
    P: np.ndarray  # constrained penalty
    lam: float
    alpha: np.ndarray


def _smooth_blocks(X, cfg: PlamConfig, lams):
    blocks, terms = [], []
    for j, name in enumerate(SMOOTH_NAMES):
        x = X[:, j]
        lo, hi = float(x.min()), float(x.max())
        if hi - lo <= 1e-12 * max(1.0, abs(lo)):
            terms.append(SmoothTerm(name, lo, hi, None, np.zeros(cfg.n_basis), 0.0, lams[j]))
            blocks.append(None)
            continue
        t = _knots(lo, hi, cfg.n_basis, cfg.degree)
        B = BSpline.design_matrix(x, t, cfg.degree).toarray()
        mean_row = B.mean(axis=0)
        # orthonormal basis of {c : mean(B c) = 0}
        q, _ = np.linalg.qr(np.column_stack([mean_row, np.eye(cfg.n_basis)]))
        Z = q[:, 1 : cfg.n_basis]
        Xc = B @ Z
        Xc -= Xc.mean(axis=0)
        P = Z.T @ _diff_penalty(cfg.n_basis) @ Z
        blocks.append(_Block(Xc, Z, P, lams[j], np.zeros(Z.shape[1])))
        terms.append(SmoothTerm(name, lo, hi, t, np.zeros(cfg.n_basis), 0.0, lams[j]))
    return blocks, terms


def _parametric_design(X):
    cols, names = [], []
    fat = X[:, 4]
    if fat.std() > 1e-12 * max(1.0, np.abs(fat).max()):
        cols.append(fat)
        names.append("beta1")
    arrest = X[:, 5].astype(int)
    present = [k for k in range(N_LEVELS) if (arrest == k).any()]
    for k in present[1:]:
        cols.append((arrest == k).astype(float))
        names.append(f"gamma{k}")
    D = np.column_stack(cols) if cols else np.zeros((len(X), 0))
    return D, tuple(names)


# -- fitting -----------------------------------------------------------------


class _State:
    def __init__(self, y, D, blocks, theta):
        self.y = y
        self.D = D
        self.blocks = blocks
        self.theta = theta
        self.b = np.zeros(D.shape[1])

    def smooth_eta(self, skip=None):
        eta = np.zeros(len(self.y))
        for j, blk in enumerate(self.blocks):
            if blk is not None and j != skip:
                eta += blk.X @ blk.alpha
        return eta

    def penalty(self):
        return sum(0.5 * b.lam * b.alpha @ b.P @ b.alpha for b in self.blocks if b is not None)

    def objective(self, theta=None, b=None, eta=None):
        theta = self.theta if theta is None else theta
        b = self.b if b is None else b
        if eta is None:
            eta = self.smooth_eta() + self.D @ b
        return ordinal_loglik(theta, eta, self.y) - self.penalty()

    def coefs(self):
        parts = [self.theta, self.b] + [b.alpha for b in self.blocks if b is not None]
        return np.concatenate(parts)


def _halving(current, step, evaluate, base_obj, max_halvings=40):
    t = 1.0
    for _ in range(max_halvings):
        cand = current + t * step
        obj = evaluate(cand)
        if obj >= base_obj:
            return cand, obj
        t *= 0.5
    return current, base_obj


def _grad_hess(theta, eta, y, M):
    """Log-likelihood gradient and Hessian in (theta, c) where eta = offset + M @ c."""
    k, q, n = len(theta), M.shape[1], len(y)
    du, dl, huu, hll, hul = _derivs(theta, eta, y)
    Ju = np.zeros((n, k + q))
    Jl = np.zeros((n, k + q))
    up = y <= k - 1
    lo = y >= 1
    Ju[np.flatnonzero(up), y[up]] = 1.0
    Jl[np.flatnonzero(lo), y[lo] - 1] = 1.0
    Ju[:, k:] = -M
    Jl[:, k:] = -M
    g = Ju.T @ du + Jl.T @ dl
    H = (Ju.T * huu) @ Ju + (Jl.T * hll) @ Jl + (Ju.T * hul) @ Jl + (Jl.T * hul) @ Ju
    return g, H


def _newton_direction(g, H):
    try:
        return -np.linalg.solve(H, g)
    except np.linalg.LinAlgError:
        return -np.linalg.lstsq(H, g, rcond=None)[0]


def _parametric_step(st: _State, clamp):
    k = len(st.theta)
    offset = st.smooth_eta()
    eta = offset + st.D @ st.b
    g, H = _grad_hess(st.theta, eta, st.y, st.D)
    step = _newton_direction(g, H)
    cur = np.concatenate([st.theta, st.b])
    base = st.objective(eta=eta)
    pen = st.penalty()

    def evaluate(c):
        c = np.clip(c, -clamp, clamp)
        return ordinal_loglik(c[:k], offset + st.D @ c[k:], st.y) - pen

    new, obj = _halving(cur, step, evaluate, base)
    new = np.clip(new, -clamp, clamp)
    st.theta, st.b = new[:k], new[k:]
    return obj


def _joint_step(st: _State, clamp):
    """Newton step on every coefficient at once.

    Backfitting alone converges slowly when the fatigue column and a smooth
    are strongly correlated; one joint step per cycle removes that drag.
    """
    live = [b for b in st.blocks if b is not None]
    k, q = len(st.theta), st.D.shape[1]
    M = np.column_stack([st.D] + [b.X for b in live]) if q or live else st.D
    sizes = [b.X.shape[1] for b in live]
    P = np.zeros((k + M.shape[1],) * 2)
    pos = k + q
    for b, m in zip(live, sizes):
        P[pos : pos + m, pos : pos + m] = b.lam * b.P
        pos += m
    cur = np.concatenate([st.theta, st.b] + [b.alpha for b in live])
    eta = M @ cur[k:]
    g, H = _grad_hess(st.theta, eta, st.y, M)
    g = g - P @ cur
    H = H - P
    step = _newton_direction(g, H)
    base = st.objective(eta=eta)

    def evaluate(c):
        c = np.clip(c, -clamp, clamp)
        return ordinal_loglik(c[:k], M @ c[k:], st.y) - 0.5 * c @ P @ c

    new, obj = _halving(cur, step, evaluate, base)
    new = np.clip(new, -clamp, clamp)
    st.theta, st.b = new[:k], new[k : k + q]
    pos = k + q
    for b, m in zip(live, sizes):
        b.alpha = new[pos : pos + m]
        pos += m
    return obj


def _push_diverging(st: _State, recent, obj, clamp):
    """Move parametric coefficients that are running away to the clamp bound.

    A coefficient counts as running away when it is already large and has
    moved the same way by at least DRIFT_STEP in each of the last
    DRIFT_CYCLES cycles (the Newton signature of a separated indicator).
    The move is kept only if the objective does not decrease.
    """
    if len(recent) < DRIFT_CYCLES or st.b.size == 0:
        return obj, False
    R = np.array(recent[-DRIFT_CYCLES:])
    pushed = False
    for i in range(st.b.size):
        v = st.b[i]
        steady = np.all(R[:, i] >= DRIFT_STEP) or np.all(R[:, i] <= -DRIFT_STEP)
        if abs(v) < DRIFT_COEF or abs(v) >= clamp or not steady:
            continue
        st.b[i] = np.sign(v) * clamp
        new = st.objective()
        if new >= obj:
            obj, pushed = new, True
        else:
            st.b[i] = v
    return obj, pushed


def _smooth_step(st: _State, j, clamp):
    blk = st.blocks[j]
    offset = st.smooth_eta(skip=j) + st.D @ st.b
    eta = offset + blk.X @ blk.alpha
    du, dl, huu, hll, hul = _derivs(st.theta, eta, st.y)
    score = -(du + dl)  # d loglik / d eta
    w = np.maximum(-(huu + hll + 2 * hul), 1e-12)  # -d2 loglik / d eta2
    # penalized weighted least squares on the working response
    z = blk.X @ blk.alpha + score / w
    lhs = (blk.X.T * w) @ blk.X + blk.lam * blk.P
    target = np.linalg.solve(lhs, (blk.X.T * w) @ z)
    other_pen = st.penalty() - 0.5 * blk.lam * blk.alpha @ blk.P @ blk.alpha
    base = ordinal_loglik(st.theta, eta, st.y) - st.penalty()

    def evaluate(a):
        a = np.clip(a, -clamp, clamp)
        return (ordinal_loglik(st.theta, offset + blk.X @ a, st.y)
                - other_pen - 0.5 * blk.lam * a @ blk.P @ a)

    new, obj = _halving(blk.alpha, target - blk.alpha, evaluate, base)
    blk.alpha = np.clip(new, -clamp, clamp)
    return obj


def _initial_thresholds(y):
    cum = np.cumsum(np.bincount(y, minlength=N_LEVELS))[:-1] / len(y)
    return np.log(cum) - np.log1p(-cum)


def _check_rows(X, y, min_rows=30):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[1] != 6 or len(X) != len(y):
        raise DegenerateDataset("expected an (n, 6) feature matrix and n scores")
    if len(y) < min_rows:
        raise DegenerateDataset(f"need at least {min_rows} rows, got {len(y)}")
    if set(np.unique(y)) != set(range(N_LEVELS)):
        raise DegenerateDataset("all four score levels must be present")
    if not np.isfinite(X).all():
        raise DegenerateDataset("non-finite feature values")
    return X, y


def _fit(X, y, cfg: PlamConfig, lams, warm: Optional[PlamModel] = None) -> PlamModel:
    blocks, terms = _smooth_blocks(X, cfg, lams)
    D, names = _parametric_design(X)
    st = _State(y, D, blocks, _initial_thresholds(y))
    if warm is not None:
        st.theta = warm.thresholds.copy()
        lookup = {"beta1": warm.beta1, **{f"gamma{k}": warm.gamma[k] for k in range(1, 4)}}
        st.b = np.array([lookup[n] for n in names], dtype=float)
        if not np.isfinite(st.b).all() or not np.isfinite(st.objective()):
            st.theta, st.b = _initial_thresholds(y), np.zeros(D.shape[1])
    obj = st.objective()
    history = [obj]
    converged = False
    recent = []
    cycle = 0
    for cycle in range(1, cfg.max_cycles + 1):
        before = st.coefs()
        b_before = st.b.copy()
        obj = _parametric_step(st, cfg.clamp)
        for j, blk in enumerate(blocks):
            if blk is not None:
                obj = _smooth_step(st, j, cfg.clamp)
        obj = _joint_step(st, cfg.clamp)
        recent.append(st.b - b_before)
        obj, _ = _push_diverging(st, recent, obj, cfg.clamp)
        history.append(obj)
        change = np.max(np.abs(st.coefs() - before)) if before.size else 0.0
        if change < cfg.tol or abs(history[-1] - history[-2]) <= 1e-13 * max(1.0, abs(obj)):
            converged = True
            break
    separation = bool(np.any(np.abs(st.coefs()) >= cfg.clamp))
    if separation:
        warnings.warn("coefficient reached the clamp bound; data look separated",
                      SeparationDetected, stacklevel=3)
    if not converged:
        raise NonConvergence(f"no convergence after {cfg.max_cycles} cycles", history)

    gamma = np.zeros(N_LEVELS)
    beta1 = 0.0
    for n, v in zip(names, st.b):
        if n == "beta1":
            beta1 = float(v)
        else:
            gamma[int(n[-1])] = float(v)
    for j, (blk, term) in enumerate(zip(blocks, terms)):
        if blk is not None:
            term.coef = blk.Z @ blk.alpha
            term.offset = float((term.basis(X[:, j], cfg.degree) @ term.coef).mean())
    return PlamModel(st.theta.copy(), terms, beta1, gamma, names, cycle, converged,
                     history, separation, cfg.degree)


def fit_plam(X, y, cfg: PlamConfig = PlamConfig(), warm: Optional[PlamModel] = None) -> PlamModel:
    """Fit the additive ordinal model to an ``(n, 6)`` FeatureVector matrix.

    Columns: mean_amp, rsd_amp, mean_int, rsd_int, fatigue, arrest.
    """
    X, y = _check_rows(X, y)
    lam = cfg.lam
    if cfg.lambda_grid:
        lam = select_lambda(X, y, cfg)
    lams = list(lam) if np.ndim(lam) else [float(lam)] * len(SMOOTH_NAMES)
    return _fit(X, y, cfg, lams, warm)


def select_lambda(X, y, cfg: PlamConfig) -> float:
    """Common smoothing parameter minimizing 5-fold held-out deviance."""
    from ..boost import stratified_kfold

    plan = stratified_kfold(y, cfg.cv_folds, cfg.seed)
    best = None
    for lam in cfg.lambda_grid:
        dev = 0.0
        for train, test in plan.splits():
            m = _fit(X[train], y[train], cfg, [lam] * 4)
            dev += deviance(m, X[test], y[test])
        if best is None or dev < best[0]:
            best = (dev, lam)
    return best[1]


def deviance(m: PlamModel, X, y) -> float:
    P = m.predict_proba(X)
    y = np.asarray(y, dtype=int)
    return -2.0 * float(np.sum(np.log(np.maximum(P[np.arange(len(y)), y], 1e-300))))


def null_deviance(y) -> float:
    y = np.asarray(y, dtype=int)
    freq = np.bincount(y, minlength=N_LEVELS) / len(y)
    return -2.0 * float(np.sum(np.log(freq[y])))


def deviance_explained(m: PlamModel, X, y) -> float:
    return 1.0 - deviance(m, X, y) / null_deviance(y)


# -- bootstrap ---------------------------------------------------------------

COEF_NAMES = ("beta1", "gamma1", "gamma2", "gamma3")


@dataclass
class BootstrapResult:
    estimate: np.ndarray  # full-data (beta1, gamma1, gamma2, gamma3)
    replicates: np.ndarray  # (B_ok, 4); NaN where a coefficient was not estimable
    se: np.ndarray
    p_values: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_skipped: int
    degenerate: list = field(default_factory=list)
    separated: list = field(default_factory=list)  # estimate at the clamp bound; p is NaN

    def as_dict(self) -> dict:
        return {
            name: {
                "estimate": float(self.estimate[i]),
                "se": float(self.se[i]),
                "p_value": float(self.p_values[i]),
                "ci95": [float(self.ci_low[i]), float(self.ci_high[i])],
            }
            for i, name in enumerate(COEF_NAMES)
        } | {"n_replicates": int(len(self.replicates)), "n_skipped": self.n_skipped,
             "degenerate": list(self.degenerate), "separated": list(self.separated)}


def _coef_vector(m: PlamModel):
    v = np.array([m.beta1, *m.gamma[1:]], dtype=float)
    free = set(m.free_params)
    for i, name in enumerate(COEF_NAMES):
        if name not in free:
            v[i] = np.nan
    return v


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    """Independent stream for replicate ``b``; does not depend on worker count."""
    return np.random.default_rng([seed, b])


def stratified_resample(y, rng) -> np.ndarray:
    idx = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        idx.append(rng.choice(members, size=len(members), replace=True))
    return np.sort(np.concatenate(idx))


def bootstrap_inference(X, y, cfg: PlamConfig = PlamConfig(), B: int = 200,
                        seed: int = 0, full: Optional[PlamModel] = None) -> BootstrapResult:
    """Nonparametric bootstrap (resampling rows within each score level).

    Standard errors are replicate standard deviations; p-values are two-sided
    normal Wald tests of the full-data estimate against those SEs.
    """
    X, y = _check_rows(X, y)
    full = full or fit_plam(X, y, cfg)
    lams = full.lambdas
    est = _coef_vector(full)
    fixed = replace(cfg, lambda_grid=None)
    reps, skipped = [], 0
    for b in range(B):
        idx = stratified_resample(y, replicate_rng(seed, b))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SeparationDetected)
                m = _fit(X[idx], y[idx], fixed, lams, warm=full)
        except NonConvergence:
            skipped += 1
            continue
        reps.append(_coef_vector(m))
    if skipped > 0.1 * B:
        raise NonConvergence(f"{skipped} of {B} bootstrap replicates failed to converge")
    R = np.array(reps).reshape(-1, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        se = np.nanstd(R, axis=0, ddof=1)
        lo = np.nanpercentile(R, 2.5, axis=0)
        hi = np.nanpercentile(R, 97.5, axis=0)
    p = np.ones(4)
    degenerate, separated = [], []
    for i, name in enumerate(COEF_NAMES):
        if np.isfinite(est[i]) and abs(est[i]) >= cfg.clamp:
            # a Wald test of a coefficient pinned at the bound means nothing
            separated.append(name)
            p[i] = np.nan
            continue
        if not np.isfinite(est[i]) or not np.isfinite(se[i]) or se[i] <= 0:
            degenerate.append(name)
            continue
        p[i] = 2.0 * stats.norm.sf(abs(est[i]) / se[i])
    return BootstrapResult(est, R, se, p, lo, hi, skipped, degenerate, separated)


# -- simulation --------------------------------------------------------------


def simulate_parametric(n: int, beta1: float, gamma: Sequence[float], seed: int,
                        thresholds=(-1.0, 0.5, 2.0)) -> tuple[np.ndarray, np.ndarray]:
    """Draw rows from a cumulative-logit model with zero smooth effects."""
    rng = np.random.default_rng(seed)
    X = np.empty((n, 6))
    X[:, 0] = rng.uniform(0.5, 1.5, n)
    X[:, 1] = rng.uniform(0.0, 0.4, n)
    X[:, 2] = rng.uniform(0.2, 0.6, n)
    X[:, 3] = rng.uniform(0.0, 0.5, n)
    X[:, 4] = rng.normal(0.0, 0.5, n)
    X[:, 5] = rng.integers(0, 4, n)
    eta = beta1 * X[:, 4] + np.asarray(gamma, dtype=float)[X[:, 5].astype(int)]
    cum = expit(np.asarray(thresholds)[None, :] - eta[:, None])
    u = rng.random(n)
    y = (u[:, None] > cum).sum(axis=1)
    return X, y


# -- estimator ---------------------------------------------------------------


class PartiallyLinearOrdinalRegression(BaseEstimator):
    """scikit-learn style wrapper around :func:`fit_plam`."""

    def __init__(self, lam=1.0, lambda_grid=None, n_basis=10, tol=1e-6, max_cycles=200, seed=0):
        self.lam = lam
        self.lambda_grid = lambda_grid
        self.n_basis = n_basis
        self.tol = tol
        self.max_cycles = max_cycles
        self.seed = seed

    def _config(self):
        grid = tuple(self.lambda_grid) if self.lambda_grid else None
        return PlamConfig(n_basis=self.n_basis, lam=self.lam, lambda_grid=grid,
                          tol=self.tol, max_cycles=self.max_cycles, seed=self.seed)

    def fit(self, X, y):
        self.model_ = fit_plam(X, y, self._config())
        self.classes_ = np.arange(N_LEVELS)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict_proba(X)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y):
        check_is_fitted(self, "model_")
        return deviance_explained(self.model_, X, y)
