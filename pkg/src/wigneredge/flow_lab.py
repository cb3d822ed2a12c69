"""Interpolating matrix flows and their exact derivative identities.

Flow 1 connects the Gaussian invariant ensemble to a Gaussian matrix with a
doubled-diagonal variance profile; flow 2 connects a Gaussian matrix with
profile S to an arbitrary ensemble with the same profile.  The module
verifies, by Monte Carlo with common random numbers, the closed-form time
derivative of E[Im m_N] along flow 1 and measures the third/fourth-cumulant
correction terms along flow 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensembles import (
    EnsembleSpec,
    EntryLaw,
    GAUSSIAN,
    cumulants,
    sample_matrix,
)
from .profile import VarianceProfile, centered_profile, make_flat_profile, modified_profile
from .resolvent import im_m_n


@dataclass(frozen=True)
class FlowSpec:
    """One interpolating flow H(t) = e^{-t/2} A + sqrt(1 - e^{-t}) B.

    kind "flow1": A is the flat-profile Gaussian invariant ensemble, B is
    Gaussian with the doubled-diagonal version of ``profile``.
    kind "flow2": A is Gaussian with ``profile``, B has ``entry_law`` with
    the same profile.
    """

    kind: str
    t: float
    profile: VarianceProfile
    beta: int = 1
    entry_law: EntryLaw = GAUSSIAN

    def __post_init__(self):
        if self.kind not in ("flow1", "flow2"):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if self.t < 0:
            raise ValueError("flow time must be nonnegative")

    @property
    def n(self) -> int:
        return self.profile.n

    def start_spec(self) -> EnsembleSpec:
        if self.kind == "flow1":
            flat = modified_profile(make_flat_profile(self.n))
            return EnsembleSpec(beta=self.beta, profile=flat)
        return EnsembleSpec(beta=self.beta, profile=self.profile)

    def end_spec(self) -> EnsembleSpec:
        if self.kind == "flow1":
            return EnsembleSpec(beta=self.beta, profile=modified_profile(self.profile))
        return EnsembleSpec(beta=self.beta, profile=self.profile, entry_law=self.entry_law)


def _seed_tuple(seed) -> tuple:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def flow_endpoints(spec: FlowSpec, seed) -> tuple[np.ndarray, np.ndarray]:
    """The two endpoint matrices from independent sub-streams of ``seed``."""
    base = _seed_tuple(seed)
    a = sample_matrix(spec.start_spec(), base + (0,))
    b = sample_matrix(spec.end_spec(), base + (1,))
    return a, b


def mix_endpoints(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    return math.exp(-t / 2.0) * a + math.sqrt(1.0 - math.exp(-t)) * b


def sample_flow(spec: FlowSpec, seed) -> np.ndarray:
    """One draw of H(t); deterministic in (spec, seed)."""
    a, b = flow_endpoints(spec, seed)
    return mix_endpoints(a, b, spec.t)


def centering_matrix(profile: VarianceProfile) -> np.ndarray:
    """T = S - (1/N) * ones; the profile's deviation from flat."""
    return centered_profile(profile).t_matrix


# ---------------------------------------------------------------------------
# flow-1 derivative identity


def derivative_rhs_contraction(g: np.ndarray, t_mat: np.ndarray, t: float) -> float:
    """e^{-t}/N * Im sum_{v,a,b} T_ab (G_vb G_bv G_aa + G_va G_ab G_bv).

    Evaluated in O(N^2) via sum_v G_vb G_bv = (G^2)_bb and
    sum_v G_bv G_va = (G^2)_ba.
    """
    n = g.shape[0]
    g2 = g @ g
    dg = np.diag(g)
    dg2 = np.diag(g2)
    term1 = dg @ t_mat @ dg2
    term2 = np.sum(t_mat * g2.T * g)
    return math.exp(-t) / n * float((term1 + term2).imag)


def derivative_rhs_loops(g: np.ndarray, t_mat: np.ndarray, t: float) -> float:
    """Brute-force triple-loop oracle for :func:`derivative_rhs_contraction`."""
    n = g.shape[0]
    acc = 0.0 + 0.0j
    for v in range(n):
        for a in range(n):
            for b in range(n):
                acc += t_mat[a, b] * (
                    g[v, b] * g[b, v] * g[a, a] + g[v, a] * g[a, b] * g[b, v]
                )
    return math.exp(-t) / n * float(acc.imag)


@dataclass(frozen=True)
class FlowDerivativeReport:
    z: complex
    t: float
    dt: float
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float
    diff_stderr: float
    sigma_distance: float
    richardson_shift: float
    trials: int


class InconclusiveBudget(RuntimeError):
    pass


def flow_derivative_check(
    spec: FlowSpec,
    z: complex,
    trials: int,
    dt: float = 0.05,
    master_seed: int = 0,
) -> FlowDerivativeReport:
    """Compare d/dt E[Im m_N] (central difference) against its closed form.

    Both sides use common random numbers: every trial derives H(t - dt),
    H(t) and H(t + dt) from the same pair of endpoint matrices, so the
    per-trial difference LHS_i - RHS_i has far lower variance than either
    side alone.  The reported sigma distance uses that paired stderr.
    """
    if spec.kind != "flow1":
        raise ValueError("the closed-form derivative requires Gaussian endpoints")
    t, n = spec.t, spec.n
    t_mat = centering_matrix(spec.profile)
    eye = np.eye(n)
    lhs_vals = np.empty(trials)
    lhs_half = np.empty(trials)
    rhs_vals = np.empty(trials)
    for k in range(trials):
        a, b = flow_endpoints(spec, (master_seed, k))
        e, eta = z.real, z.imag

        def im_at(tv):
            lam = np.linalg.eigvalsh(mix_endpoints(a, b, tv))
            return im_m_n(lam, e, eta)

        lhs_vals[k] = (im_at(t + dt) - im_at(t - dt)) / (2.0 * dt)
        lhs_half[k] = (im_at(t + dt / 2.0) - im_at(t - dt / 2.0)) / dt
        g = np.linalg.inv(mix_endpoints(a, b, t) - z * eye)
        rhs_vals[k] = derivative_rhs_contraction(g, t_mat, t)
    lhs = float(lhs_vals.mean())
    rhs = float(rhs_vals.mean())
    lhs_se = float(lhs_vals.std(ddof=1) / math.sqrt(trials))
    rhs_se = float(rhs_vals.std(ddof=1) / math.sqrt(trials))
    diff = lhs_vals - rhs_vals
    diff_se = float(diff.std(ddof=1) / math.sqrt(trials))
    richardson = float(abs(lhs_half.mean() - lhs) / 3.0)  # O(dt^2) step-halving gap
    denom = diff_se + richardson
    sigma = abs(float(diff.mean())) / denom if denom > 0 else math.inf
    if diff_se == 0.0 and rhs_se == 0.0 and lhs_se == 0.0:
        raise InconclusiveBudget("zero variance: trials insufficient or degenerate")
    return FlowDerivativeReport(
        z=z,
        t=t,
        dt=dt,
        lhs=lhs,
        lhs_stderr=lhs_se,
        rhs=rhs,
        rhs_stderr=rhs_se,
        diff_stderr=diff_se,
        sigma_distance=sigma,
        richardson_shift=richardson,
        trials=trials,
    )


# ---------------------------------------------------------------------------
# derivatives of (G^2)_ba under symmetric entry perturbations


def _pair_mul_b(u1, u2, p, q, r):
    """(u1, u2) times the transfer matrix B = [[r, q], [p, r]] on the left."""
    return u1 * r + u2 * p, u1 * q + u2 * r


def g2_entry_derivative(g: np.ndarray, g2: np.ndarray, k: int) -> np.ndarray:
    """All entries d^k (G^2)_ba / d h_ab^k as an N x N array (symmetric rule).

    Uses the closed form d^k(G G) = (-1)^k k! sum_{i+j=k} G (M G)^i G (M G)^j
    with M = E_ab + E_ba, reduced to 2x2 transfer-matrix products in the
    scalar entries p = G_aa, q = G_bb, r = G_ab, X = (G^2)_aa, Y = (G^2)_bb,
    Z = (G^2)_ba.  Diagonal entries (a = b, M = E_aa) equal the general
    formula divided by 2^k.
    """
    if k < 1:
        raise ValueError("derivative order must be >= 1")
    p = np.diag(g)[:, None] + np.zeros_like(g)
    q = np.diag(g)[None, :] + np.zeros_like(g)
    r = g
    x = np.diag(g2)[:, None] + np.zeros_like(g)
    y = np.diag(g2)[None, :] + np.zeros_like(g)
    z = g2.T.copy()
    total = np.zeros_like(g)
    for i in range(k + 1):
        j = k - i
        if i == 0 and j == 0:
            term = z
        elif j == 0:
            # (r, q) B^{i-1} (Z, X)^T
            u1, u2 = z, x
            for _ in range(i - 1):
                u1, u2 = u1 * r + u2 * q, u1 * p + u2 * r  # B acting on column pairs
            term = r * u1 + q * u2
        elif i == 0:
            u1, u2 = r, p
            for _ in range(j - 1):
                u1, u2 = u1 * r + u2 * q, u1 * p + u2 * r
            term = z * u1 + y * u2
        else:
            u1, u2 = r, p  # column vector (r, p)^T
            for _ in range(j - 1):
                u1, u2 = u1 * r + u2 * q, u1 * p + u2 * r
            v1 = z * u1 + y * u2  # C (B^{j-1} (r,p)^T)
            v2 = x * u1 + z * u2
            for _ in range(i - 1):
                v1, v2 = v1 * r + v2 * q, v1 * p + v2 * r
            term = r * v1 + q * v2
        total = total + term
    total = (-1.0) ** k * math.factorial(k) * total
    diag = np.diag_indices(g.shape[0])
    total[diag] = total[diag] / 2.0**k
    return total


def g2_entry_derivative_fd(
    h: np.ndarray, z: complex, a: int, b: int, k: int, step: float = 1e-3
) -> complex:
    """Finite-difference oracle for d^k (G^2)_ba / d h_ab^k at one entry."""
    n = h.shape[0]
    eye = np.eye(n)

    def g2ba(delta):
        hp = h.astype(complex).copy()
        hp[a, b] += delta
        if a != b:
            hp[b, a] += delta
        g = np.linalg.inv(hp - z * eye)
        return (g @ g)[b, a]

    s = step
    if k == 1:
        return (g2ba(s) - g2ba(-s)) / (2 * s)
    if k == 2:
        return (g2ba(s) - 2 * g2ba(0) + g2ba(-s)) / s**2
    if k == 3:
        return (g2ba(2 * s) - 2 * g2ba(s) + 2 * g2ba(-s) - g2ba(-2 * s)) / (2 * s**3)
    raise ValueError("finite-difference oracle supports k <= 3")


# ---------------------------------------------------------------------------
# third/fourth cumulant correction terms along flow 2


@dataclass(frozen=True)
class CorrectionTerms:
    k3: float
    k3_stderr: float
    k4: float
    k4_stderr: float
    im_mn: float
    im_mn_stderr: float
    z: complex
    t: float
    trials: int


def k3_k4_terms(
    spec: FlowSpec,
    z: complex,
    trials: int,
    master_seed: int = 0,
) -> CorrectionTerms:
    """Monte-Carlo estimates of the third/fourth-cumulant flow corrections.

    K3 = N^{-5/2} sum_{a,b} s3_ab E[Im d^2 (G^2)_ba / d h_ab^2] and
    K4 = N^{-3} sum_{a,b} s4_ab E[Im d^3 (G^2)_ba / d h_ab^3], where
    s_(k+1)_ab = (1 - e^{-t})^{(k-1)/2} times the (k+1)-th cumulant of the
    normalized end-point entry sqrt(N) h_ab.
    """
    if spec.kind != "flow2":
        raise ValueError("cumulant corrections are defined along flow 2")
    n, t = spec.n, spec.t
    cum = cumulants(spec.entry_law)
    ns = n * spec.profile.entries
    mix = 1.0 - math.exp(-t)
    s3 = math.sqrt(mix) * ns**1.5 * cum.c3
    s4 = mix * ns**2 * cum.c4
    # the diagonal entries follow the (possibly different) diagonal law
    dcum = cumulants(spec.end_spec().diag_law)
    di = np.diag_indices(n)
    s3[di] = math.sqrt(mix) * (n * np.diag(spec.profile.entries)) ** 1.5 * dcum.c3
    s4[di] = mix * (n * np.diag(spec.profile.entries)) ** 2 * dcum.c4
    eye = np.eye(n)
    k3_vals = np.empty(trials)
    k4_vals = np.empty(trials)
    im_vals = np.empty(trials)
    for k in range(trials):
        h = sample_flow(spec, (master_seed, k))
        g = np.linalg.inv(h - z * eye)
        g2 = g @ g
        d2 = g2_entry_derivative(g, g2, 2)
        d3 = g2_entry_derivative(g, g2, 3)
        k3_vals[k] = float(np.sum(s3 * d2.imag)) / n**2.5
        k4_vals[k] = float(np.sum(s4 * d3.imag)) / n**3
        im_vals[k] = float(np.trace(g).imag) / n
    def mse(v):
        return float(v.mean()), float(v.std(ddof=1) / math.sqrt(trials))

    k3_m, k3_se = mse(k3_vals)
    k4_m, k4_se = mse(k4_vals)
    im_m, im_se = mse(im_vals)
    return CorrectionTerms(
        k3=k3_m,
        k3_stderr=k3_se,
        k4=k4_m,
        k4_stderr=k4_se,
        im_mn=im_m,
        im_mn_stderr=im_se,
        z=z,
        t=t,
        trials=trials,
    )


# ---------------------------------------------------------------------------
# trajectory band and the differentiation rule


@dataclass(frozen=True)
class TrajectoryReport:
    t_grid: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    band_pass: bool


def gronwall_band(
    spec: FlowSpec,
    z: complex,
    t_grid: Sequence[float],
    trials: int,
    master_seed: int = 0,
    c_mult: float = 3.0,
    c_add: float = 3.0,
) -> TrajectoryReport:
    """E[Im m_N(t, z)] along the flow; checks it never exceeds
    c_mult * value(t=0) + c_add * N^{-1/3}."""
    n = spec.n
    t_grid = np.asarray(t_grid, dtype=float)
    means = np.empty(len(t_grid))
    ses = np.empty(len(t_grid))
    e, eta = z.real, z.imag
    for ti, t in enumerate(t_grid):
        vals = np.empty(trials)
        for k in range(trials):
            a, b = flow_endpoints(spec, (master_seed, k))
            lam = np.linalg.eigvalsh(mix_endpoints(a, b, float(t)))
            vals[k] = im_m_n(lam, e, eta)
        means[ti] = vals.mean()
        ses[ti] = vals.std(ddof=1) / math.sqrt(trials)
    bound = c_mult * means[0] + c_add * n ** (-1.0 / 3.0)
    return TrajectoryReport(
        t_grid=t_grid,
        means=means,
        stderrs=ses,
        band_pass=bool(np.all(means <= bound)),
    )


def diff_rule_check(
    h: np.ndarray, z: complex, ab: tuple[int, int], ij: tuple[int, int], step: float = 1e-6
) -> float:
    """Relative residual of the resolvent differentiation rule.

    dG_ij/dh_ab = -(G_ia G_bj + G_ib G_aj) / (1 + delta_ab) under a
    symmetric perturbation, compared to a central finite difference.
    """
    a, b = ab
    i, j = ij
    n = h.shape[0]
    eye = np.eye(n)
    g = np.linalg.inv(h.astype(complex) - z * eye)
    delta = 1.0 if a == b else 0.0
    analytic = -(g[i, a] * g[b, j] + g[i, b] * g[a, j]) / (1.0 + delta)

    def g_ij(eps):
        hp = h.astype(complex).copy()
        hp[a, b] += eps
        if a != b:
            hp[b, a] += eps
        return np.linalg.inv(hp - z * eye)[i, j]

    fd = (g_ij(step) - g_ij(-step)) / (2.0 * step)
    scale = max(abs(fd), abs(analytic), 1e-12)
    return abs(analytic - fd) / scale
