"""One-way random-intercept model  y_ij = beta0 + u_j + e_ij, fit by REML."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from ..exceptions import DegenerateGroups


@dataclass
class MixedModel:
    beta0: float
    sigma2_u: float
    sigma2_e: float
    se: float
    p_value: float
    n_groups: int
    n_obs: int
    flags: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "beta0": self.beta0,
            "sigma2_u": self.sigma2_u,
            "sigma2_e": self.sigma2_e,
            "se_beta0": self.se,
            "p_value": self.p_value,
            "n_groups": self.n_groups,
            "n_obs": self.n_obs,
            "flags": list(self.flags),
        }


def _group(values, groups):
    y = np.asarray(values, dtype=float)
    g = np.asarray(groups)
    if y.ndim != 1 or len(y) != len(g) or len(y) == 0:
        raise DegenerateGroups("values and groups must be equal-length, nonempty")
    if not np.isfinite(y).all():
        raise DegenerateGroups("non-finite values")
    labels = sorted(set(g.tolist()), key=str)
    parts = [y[g == lab] for lab in labels]
    small = [str(lab) for lab, p in zip(labels, parts) if len(p) < 2]
    if small:
        raise DegenerateGroups(f"groups with fewer than 2 observations: {small}")
    return parts


class _Profile:
    """REML criterion profiled over sigma2_e, as a function of tau = sigma2_u / sigma2_e."""

    def __init__(self, parts):
        self.parts = parts
        self.n = np.array([len(p) for p in parts], dtype=float)
        self.means = np.array([p.mean() for p in parts])
        self.within = sum(float(((p - p.mean()) ** 2).sum()) for p in parts)
        self.N = int(self.n.sum())

    def solve(self, tau):
        w = self.n / (1.0 + self.n * tau)
        beta = float(w @ self.means / w.sum())
        q = self.within + float(w @ (self.means - beta) ** 2)
        return beta, q / (self.N - 1), w

    def neg_reml(self, tau):
        _, s2, w = self.solve(tau)
        if s2 <= 0:
            return np.inf
        return 0.5 * (np.log1p(self.n * tau).sum() + math.log(w.sum()) + (self.N - 1) * math.log(s2))


def fit_mixed(values, groups) -> MixedModel:
    """REML fit; the variance ratio is found by bounded scalar search on log scale.

    With a single group the random effect is not identified and ``tau = 0``,
    which reduces to the one-sample mean with a normal Wald test.
    """
    parts = _group(values, groups)
    prof = _Profile(parts)
    flags = []
    tau = 0.0
    if len(parts) == 1:
        flags.append("single_group")
    elif prof.solve(0.0)[1] > 0:
        res = optimize.minimize_scalar(lambda z: prof.neg_reml(math.exp(z)), bounds=(-25.0, 15.0), method="bounded",
                                       options={"xatol": 1e-10})
        cand = math.exp(res.x)
        if prof.neg_reml(cand) < prof.neg_reml(0.0):
            tau = cand
    beta, s2e, w = prof.solve(tau)
    se = math.sqrt(s2e / w.sum())
    if se <= 0.0:
        flags.append("degenerate_se")
        p = 1.0
    else:
        p = float(2.0 * stats.norm.sf(abs(beta) / se))
    return MixedModel(beta, tau * s2e, s2e, se, p, len(parts), prof.N, flags)


def simulate_mixed(n_per_group: int, beta0: float, sigma_u: float, sigma_e: float, seed: int,
                   groups=("FT", "HM", "RA")):
    rng = np.random.default_rng(seed)
    u = rng.normal(0.0, sigma_u, len(groups))
    values = np.concatenate([beta0 + uj + rng.normal(0.0, sigma_e, n_per_group) for uj in u])
    labels = np.repeat(np.array(groups), n_per_group)
    return values, labels
