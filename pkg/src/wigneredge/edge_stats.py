"""Largest-eigenvalue statistics at the spectral edge.

Rescaling of lambda_max onto the Tracy-Widom scale, sup-distance of the
empirical CDF to TW_beta, power-law convergence-rate fits, and the smooth
cutoff / Green-function-integral sandwich that brackets P(lambda_max < E).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .ensembles import EnsembleSpec, make_rng, sample_matrix
from .semicircle import DomainError
from .tracy_widom import TWDistribution

DKW_95 = 1.36
DEFAULT_R0 = -3.5

CENTERINGS = ("fixed_2", "goe_shift")


class QuadratureFailure(RuntimeError):
    pass


class InconclusiveBudget(RuntimeError):
    pass


def edge_plus(n: int, centering: str) -> float:
    """Soft-edge centering: 2 exactly, or the finite-N shift sqrt(4 - 2/N)."""
    if centering == "fixed_2":
        return 2.0
    if centering == "goe_shift":
        return math.sqrt(4.0 - 2.0 / n)
    raise ValueError(f"unknown centering {centering!r}")


def rescale_lambda_max(samples, n: int, centering: str = "fixed_2") -> np.ndarray:
    """Map largest eigenvalues onto the N^{2/3}(lambda - E_plus) scale."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("rescale_lambda_max needs at least one sample")
    return n ** (2.0 / 3.0) * (samples - edge_plus(n, centering))


@dataclass(frozen=True)
class SupDistance:
    d: float
    dkw: float
    r0: float
    trials: int
    argmax: float


def sup_distance(
    rescaled: np.ndarray, tw: TWDistribution, r0: float = DEFAULT_R0
) -> SupDistance:
    """sup_{r > r0} |empirical CDF(r) - F_beta(r)| with the DKW 95% band.

    The supremum over the step empirical CDF is attained at jump points,
    evaluated from both sides of each jump.
    """
    rescaled = np.asarray(rescaled, dtype=float)
    m = len(rescaled)
    if m < 100:
        raise ValueError(f"sup_distance needs at least 100 samples, got {m}")
    xs = np.sort(rescaled)
    keep = xs > r0
    f_ref = tw.cdf_at(xs)
    ranks = np.arange(1, m + 1) / m
    upper = np.abs(ranks - f_ref)
    lower = np.abs((np.arange(m) / m) - f_ref)
    if keep.any():
        d = float(max(upper[keep].max(), lower[keep].max()))
        where = int(np.argmax(np.where(keep, np.maximum(upper, lower), -1.0)))
        argmax = float(xs[where])
    else:
        # all mass below the cutoff: only the flat tail above r0 contributes
        d = float(1.0 - tw.cdf_at(r0))
        argmax = r0
    return SupDistance(d=d, dkw=DKW_95 / math.sqrt(m), r0=r0, trials=m, argmax=argmax)


@dataclass(frozen=True)
class EdgeExperiment:
    """Rescaled largest-eigenvalue samples of one ensemble at one size."""

    spec: EnsembleSpec
    trials: int
    centering: str
    rescaled: np.ndarray
    r0: float = DEFAULT_R0

    def __post_init__(self):
        if self.centering not in CENTERINGS:
            raise ValueError(f"unknown centering {self.centering!r}")
        if len(self.rescaled) != self.trials:
            raise ValueError("rescaled length must equal trials")
        if not np.all(np.isfinite(self.rescaled)):
            raise ValueError("non-finite rescaled values")


def collect_lambda_max(
    spec: EnsembleSpec, trials: int, master_seed: int = 0
) -> np.ndarray:
    """Largest eigenvalue of ``trials`` independent draws (seeded per trial)."""
    from scipy.linalg import eigh

    n = spec.n
    out = np.empty(trials)
    for t in range(trials):
        h = sample_matrix(spec, (master_seed, t))
        out[t] = eigh(h, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0]
    return out


def run_edge_experiment(
    spec: EnsembleSpec,
    trials: int,
    centering: str = "fixed_2",
    master_seed: int = 0,
    r0: float = DEFAULT_R0,
    lambda_max: np.ndarray | None = None,
) -> EdgeExperiment:
    if lambda_max is None:
        lambda_max = collect_lambda_max(spec, trials, master_seed)
    rescaled = rescale_lambda_max(lambda_max, spec.n, centering)
    return EdgeExperiment(spec=spec, trials=trials, centering=centering, rescaled=rescaled, r0=r0)


@dataclass(frozen=True)
class RateFit:
    alpha: float
    c: float
    residuals: np.ndarray
    ci_lo: float
    ci_hi: float
    d_values: np.ndarray
    d_adjusted: np.ndarray
    n_values: np.ndarray
    bound_pass: bool


def rate_fit(
    n_values: Sequence[int],
    d_values: Sequence[float],
    trials: int,
    omega: float = 0.15,
    n_bootstrap: int = 2000,
    seed: int = 0,
) -> RateFit:
    """Power-law fit log D = log c - alpha log N after DKW floor subtraction.

    The sampling floor 1.36/sqrt(M) is removed in quadrature; the bound
    check D(N) <= N^{-1/3+omega} + floor is reported separately.
    """
    n_arr = np.asarray(n_values, dtype=float)
    d_arr = np.asarray(d_values, dtype=float)
    if len(n_arr) < 3:
        raise ValueError("rate_fit needs at least 3 matrix sizes")
    floor = DKW_95 / math.sqrt(trials)
    if np.all(d_arr < 2.0 * floor):
        raise InconclusiveBudget(
            f"all distances within 2x the DKW floor {floor:.4g}; increase trials"
        )
    adj = np.sqrt(np.clip(d_arr**2 - floor**2, (0.05 * floor) ** 2, None))
    logn = np.log(n_arr)
    logd = np.log(adj)
    coef = np.polyfit(logn, logd, 1)
    alpha = -coef[0]
    c = math.exp(coef[1])
    fitted = np.polyval(coef, logn)
    residuals = logd - fitted
    rng = make_rng(seed, 0xB007)
    boot = np.empty(n_bootstrap)
    # parametric bootstrap: D has sampling noise of order floor/2 per point
    sigma = floor / 2.0
    for b in range(n_bootstrap):
        d_b = d_arr + sigma * rng.standard_normal(len(d_arr))
        adj_b = np.sqrt(np.clip(d_b**2 - floor**2, (0.05 * floor) ** 2, None))
        boot[b] = -np.polyfit(logn, np.log(adj_b), 1)[0]
    lo, hi = np.quantile(boot, [0.025, 0.975])
    bound = n_arr ** (-1.0 / 3.0 + omega) + floor
    return RateFit(
        alpha=float(alpha),
        c=float(c),
        residuals=residuals,
        ci_lo=float(lo),
        ci_hi=float(hi),
        d_values=d_arr,
        d_adjusted=adj,
        n_values=n_arr,
        bound_pass=bool(np.all(d_arr <= bound)),
    )


# ---------------------------------------------------------------------------
# smooth cutoff


# logistic derivatives as polynomials in L: L' = L^2 - L, then chain
_LOGISTIC_POLYS: list = []


def _logistic_polys():
    if not _LOGISTIC_POLYS:
        p = np.polynomial.Polynomial([0.0, -1.0, 1.0])  # L' = L^2 - L
        _LOGISTIC_POLYS.append(p)
        for _ in range(3):
            _LOGISTIC_POLYS.append(_LOGISTIC_POLYS[-1].deriv() * p)
    return _LOGISTIC_POLYS


def _smoothstep_derivs(u: np.ndarray) -> np.ndarray:
    """sigma, sigma', ..., sigma'''' of the C-infinity smoothstep on [0, 1].

    sigma(u) = 1/(1 + exp(g(u))) with g(u) = 1/u - 1/(1-u); derivatives via
    the composition formula up to fourth order.  Returns shape (5,) + u.shape.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros((5,) + u.shape)
    out[0] = np.where(u >= 1.0, 1.0, 0.0)
    interior = (u > 1e-3) & (u < 1.0 - 1e-3)  # outside: below underflow scale
    if not interior.any():
        return out
    v = u[interior]
    w = 1.0 - v
    g = 1.0 / v - 1.0 / w
    # g^(k) = (-1)^k k!/v^(k+1) - k!/w^(k+1)
    g1 = -1.0 / v**2 - 1.0 / w**2
    g2 = 2.0 / v**3 - 2.0 / w**3
    g3 = -6.0 / v**4 - 6.0 / w**4
    g4 = 24.0 / v**5 - 24.0 / w**5
    big = np.exp(np.minimum(g, 700.0))
    lg = 1.0 / (1.0 + big)
    polys = _logistic_polys()
    f1, f2, f3, f4 = (p(lg) for p in polys)
    out[0][interior] = lg
    out[1][interior] = f1 * g1
    out[2][interior] = f2 * g1**2 + f1 * g2
    out[3][interior] = f3 * g1**3 + 3.0 * f2 * g1 * g2 + f1 * g3
    out[4][interior] = (
        f4 * g1**4 + 6.0 * f3 * g1**2 * g2 + f2 * (3.0 * g2**2 + 4.0 * g1 * g3) + f1 * g4
    )
    return out


def cutoff_f(x, order: int = 0):
    """Smooth non-increasing cutoff: 1 for |x| <= 1/9, 0 for |x| >= 2/9.

    ``order`` selects the analytic derivative (0..4).  The ramp is the
    C-infinity smoothstep evaluated at u = 2 - 9|x| (so du/dx = -9 sign x);
    all derivatives vanish identically on the two plateaus.
    """
    if not 0 <= order <= 4:
        raise ValueError("derivative order must be in 0..4")
    x = np.asarray(x, dtype=float)
    u = 2.0 - 9.0 * np.abs(x)
    d = _smoothstep_derivs(u)
    if order == 0:
        val = d[0]
    else:
        val = d[order] * (-9.0 * np.sign(np.atleast_1d(x))) ** order
    return val.reshape(x.shape) if x.ndim else float(val[0] if val.ndim else val)


# ---------------------------------------------------------------------------
# Green-function sandwich


@dataclass(frozen=True)
class SandwichObservable:
    """Parameters of the smoothed eigenvalue-counting observable near E = 2."""

    n: int
    epsilon: float = 0.05
    gamma: float = 3.0
    eta: float | None = None

    def __post_init__(self):
        # fine resolution keeps both the bulk Lorentzian-tail contribution to
        # the counting integral and the l-window resolution loss well below
        # the cutoff threshold 1/9 at desk-scale N
        eta = self.eta if self.eta is not None else self.n ** (-1.0 - 12.0 * self.epsilon)
        if eta > self.n ** (-2.0 / 3.0 - self.epsilon):
            raise DomainError(
                f"eta = {eta:.3g} above the edge ceiling N^(-2/3-eps)"
            )
        object.__setattr__(self, "eta", float(eta))

    @property
    def l(self) -> float:
        return self.n ** (6.0 * self.epsilon) * self.eta

    @property
    def e_l(self) -> float:
        return 2.0 + 4.0 * self.n ** (-2.0 / 3.0 + self.epsilon)


_SANDWICH_GL = leggauss(64)


def counting_edges(
    eigenvalues: np.ndarray, e_lo: float, e_hi: float, eta: float
) -> np.ndarray:
    """Panel edges resolving every Lorentzian peak inside the window.

    Each eigenvalue near the window contributes a geometric cluster of edges
    at distances {0, 2, 8, 32} * eta so that the 64-node rule sees a smooth
    integrand on every panel.
    """
    base = np.linspace(e_lo, e_hi, 5)
    near = eigenvalues[
        (eigenvalues > e_lo - 40.0 * eta) & (eigenvalues < e_hi + 40.0 * eta)
    ]
    offsets = eta * np.array([-32.0, -8.0, -2.0, 0.0, 2.0, 8.0, 32.0])
    cluster = (near[:, None] + offsets[None, :]).ravel()
    cluster = cluster[(cluster > e_lo) & (cluster < e_hi)]
    edges = np.unique(np.concatenate([base, cluster]))
    return edges


def counting_integral(
    eigenvalues: np.ndarray, e_lo: float, e_hi: float, eta: float, refine: int = 1
) -> float:
    """N * integral_{e_lo}^{e_hi} Im m_N(y + i eta) dy by Gauss-Legendre.

    Panelized 64-node rule on peak-adapted panels; ``refine`` splits each
    panel for the self-convergence certificate.
    """
    if e_hi <= e_lo:
        return 0.0
    xg, wg = _SANDWICH_GL
    edges = counting_edges(eigenvalues, e_lo, e_hi, eta)
    if refine > 1:
        fine = np.linspace(edges[:-1], edges[1:], refine + 1, axis=1)
        edges = np.unique(fine.ravel())
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    ys = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    ws = (half[:, None] * wg[None, :]).ravel()
    d = eigenvalues[:, None] - ys[None, :]
    imn = (eta / (d * d + eta * eta)).sum(axis=0)
    return float(np.dot(ws, imn))


@dataclass(frozen=True)
class SandwichReport:
    e_grid: np.ndarray
    lower: np.ndarray
    lower_se: np.ndarray
    upper: np.ndarray
    upper_se: np.ndarray
    prob: np.ndarray
    prob_se: np.ndarray
    holds: np.ndarray
    fraction: float


def sandwich_check(
    spec: EnsembleSpec,
    e_grid: Sequence[float],
    obs: SandwichObservable,
    trials: int,
    master_seed: int = 0,
    tol_sigmas: float = 2.0,
    degenerate_f: bool = False,
) -> SandwichReport:
    """Monte-Carlo check that smoothed Green-function counts bracket P(lambda_max < E).

    Per energy E the three estimated quantities are
    E[F(N int_{E-l}^{E_L})] - N^-Gamma  <=  P(lambda_max < E)  <=
    E[F(N int_{E+l}^{E_L})] + N^-Gamma, with F the smooth cutoff.
    ``degenerate_f`` replaces F by 1 (trivial-bracketing test mode).
    """
    n = spec.n
    e_grid = np.asarray(e_grid, dtype=float)
    for e in e_grid:
        if abs(e - 2.0) > n ** (-2.0 / 3.0 + obs.epsilon) * (1.0 + 1e-12):
            raise DomainError(f"E = {e} outside |E-2| <= N^(-2/3+eps)")
    eta, l, e_l = obs.eta, obs.l, obs.e_l
    n_gamma = n ** (-obs.gamma)
    f_lo = np.empty((trials, len(e_grid)))
    f_hi = np.empty((trials, len(e_grid)))
    below = np.empty((trials, len(e_grid)))
    for t in range(trials):
        lam = np.linalg.eigvalsh(sample_matrix(spec, (master_seed, t)))
        for ei, e in enumerate(e_grid):
            x_lo = counting_integral(lam, e - l, e_l, eta)
            x_hi = counting_integral(lam, e + l, e_l, eta)
            if degenerate_f:
                f_lo[t, ei] = 1.0
                f_hi[t, ei] = 1.0
            else:
                f_lo[t, ei] = cutoff_f(x_lo)
                f_hi[t, ei] = cutoff_f(x_hi)
            below[t, ei] = 1.0 if lam[-1] < e else 0.0
    # quadrature self-convergence certificate at the first sample/energy
    lam0 = np.linalg.eigvalsh(sample_matrix(spec, (master_seed, 0)))
    q1 = counting_integral(lam0, e_grid[0] - l, e_l, eta, refine=1)
    q2 = counting_integral(lam0, e_grid[0] - l, e_l, eta, refine=2)
    if abs(q1 - q2) > 1e-8 * max(1.0, abs(q2)):
        raise QuadratureFailure(f"panel self-convergence {abs(q1 - q2):.3g} > 1e-8")

    def mse(a):
        return a.mean(axis=0), a.std(axis=0, ddof=1) / math.sqrt(trials)

    lo_m, lo_se = mse(f_lo)
    hi_m, hi_se = mse(f_hi)
    p_m, p_se = mse(below)
    slack_lo = (lo_m - n_gamma) - p_m
    slack_hi = p_m - (hi_m + n_gamma)
    se_lo = np.sqrt(lo_se**2 + p_se**2)
    se_hi = np.sqrt(hi_se**2 + p_se**2)
    holds = (slack_lo <= tol_sigmas * se_lo) & (slack_hi <= tol_sigmas * se_hi)
    return SandwichReport(
        e_grid=e_grid,
        lower=lo_m - n_gamma,
        lower_se=lo_se,
        upper=hi_m + n_gamma,
        upper_se=hi_se,
        prob=p_m,
        prob_se=p_se,
        holds=holds,
        fraction=float(holds.mean()),
    )
