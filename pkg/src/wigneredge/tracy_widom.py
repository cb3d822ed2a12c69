"""Tracy-Widom CDFs TW_1 and TW_2 to certified accuracy.

Primary route: the Hastings-McLeod solution of Painleve II q'' = s q + 2 q^3
obtained as a two-point boundary value problem (Airy data on the right,
the sqrt(-s/2) asymptote on the left), integrated into
F2(s) = exp(-int (x-s) q^2) and F1(s) = exp(-1/2 int q) sqrt(F2(s)).

Independent oracle: Nystrom discretization of the Fredholm determinants
det(I - K_Airy) for beta = 2 and det(I - Ai-average kernel) for beta = 1.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_bvp
from scipy.interpolate import PchipInterpolator

from .airy import airy_ai, airy_ai_prime, airy_both

S_LEFT = -10.0
S_RIGHT = 6.0
S_START = 8.0
GRID_POINTS = 1601


class StiffFailure(RuntimeError):
    pass


def _hm_left_asymptote(s: float) -> float:
    """Left asymptote q ~ sqrt(-s/2)(1 + 1/(8 s^3) - 73/(128 s^6) + ...)."""
    return math.sqrt(-s / 2.0) * (
        1.0 + 1.0 / (8.0 * s**3) - 73.0 / (128.0 * s**6) + 10657.0 / (1024.0 * s**9)
    )


@dataclass(frozen=True)
class PainleveSolution:
    """Hastings-McLeod solution on [S_LEFT, S_START] with C1 interpolant."""

    sol: object
    s_left: float
    s_start: float

    def q(self, s):
        return self.sol(np.asarray(s, dtype=float))[0]

    def q_prime(self, s):
        return self.sol(np.asarray(s, dtype=float))[1]


@functools.lru_cache(maxsize=1)
def painleve_q(tol: float = 1e-11) -> PainleveSolution:
    """Solve the Hastings-McLeod connection problem by collocation."""

    def rhs(x, y):
        return np.vstack([y[1], x * y[0] + 2.0 * y[0] ** 3])

    ai_right = airy_ai(S_START)

    def bc(ya, yb):
        return np.array([ya[0] - _hm_left_asymptote(S_LEFT), yb[0] - ai_right])

    x = np.linspace(S_LEFT, S_START, 600)
    guess = np.where(
        x < 0.0,
        np.sqrt(np.clip(-x / 2.0, 1e-12, None)),
        airy_ai(np.clip(x, 0.0, None)),
    )
    y0 = np.vstack([guess, np.gradient(guess, x)])
    sol = solve_bvp(rhs, bc, x, y0, tol=tol, max_nodes=400_000)
    if sol.status != 0:
        raise StiffFailure(f"Painleve II collocation failed: {sol.message}")
    if np.any(sol.sol(np.linspace(S_LEFT, S_START, 2000))[0] <= 0.0):
        raise StiffFailure("Hastings-McLeod solution lost positivity")
    return PainleveSolution(sol=sol.sol, s_left=S_LEFT, s_start=S_START)


_GL_X, _GL_W = leggauss(12)


def _panel_integrals(f, edges: np.ndarray) -> np.ndarray:
    """Gauss-Legendre integral of f over each interval of ``edges``."""
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    return (vals * _GL_W).sum(axis=1) * half


@dataclass(frozen=True)
class TWDistribution:
    """Tabulated, monotonically interpolated Tracy-Widom CDF."""

    beta: int
    grid: np.ndarray
    cdf: np.ndarray
    accuracy: float
    method: str

    def __post_init__(self):
        object.__setattr__(self, "_interp", PchipInterpolator(self.grid, self.cdf))
        object.__setattr__(
            self, "_inv", PchipInterpolator(self.cdf, self.grid)
        )

    def cdf_at(self, s):
        """CDF value, clamped with tail asymptotics beyond the table."""
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape if s.ndim else (1,))
        flat_s = np.atleast_1d(s)
        below = flat_s < self.grid[0]
        above = flat_s > self.grid[-1]
        mid = ~(below | above)
        out[below] = 0.0
        out[mid] = np.clip(self._interp(flat_s[mid]), 0.0, 1.0)
        if above.any():
            out[above] = 1.0 - self._right_tail(flat_s[above])
        return out if s.ndim else float(out[0])

    def _right_tail(self, s):
        z = (2.0 / 3.0) * s**1.5
        if self.beta == 2:
            tail = np.exp(-2.0 * z) / (16.0 * np.pi * s**1.5)
        else:
            tail = np.exp(-z) / (4.0 * np.sqrt(np.pi) * s**1.5)
        return np.minimum(tail, 1.0 - self.cdf[-1])

    def ppf(self, u):
        """Inverse CDF on the tabulated range (for sampling in tests)."""
        u = np.clip(u, self.cdf[0], self.cdf[-1])
        return self._inv(u)

    def mean(self) -> float:
        """E[TW_beta] by Simpson quadrature over the tabulated CDF."""
        from scipy.integrate import simpson

        g = self.grid
        lo = g <= 0.0
        hi = g >= 0.0
        neg = -simpson(self.cdf[lo], x=g[lo])
        pos = simpson(1.0 - self.cdf[hi], x=g[hi])
        return float(neg + pos)

    def to_csv_rows(self):
        for s, f in zip(self.grid, self.cdf):
            yield s, f


def _log_f2_and_intq(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(-log F2, int_s^inf q) on a descending-accumulated grid (ascending input)."""
    pq = painleve_q()
    edges = grid
    q2 = _panel_integrals(lambda x: pq.q(x) ** 2, edges)
    xq2 = _panel_integrals(lambda x: x * pq.q(x) ** 2, edges)
    qint = _panel_integrals(pq.q, edges)
    # interval [grid[-1], S_START]
    top_edges = np.linspace(grid[-1], S_START, 64)
    q2_top = _panel_integrals(lambda x: pq.q(x) ** 2, top_edges).sum()
    xq2_top = _panel_integrals(lambda x: x * pq.q(x) ** 2, top_edges).sum()
    q_top = _panel_integrals(pq.q, top_edges).sum()
    # tails beyond S_START where q = Ai to well below table accuracy
    tail_edges = np.linspace(S_START, S_START + 16.0, 64)
    q2_tail = _panel_integrals(lambda x: airy_ai(x) ** 2, tail_edges).sum()
    xq2_tail = _panel_integrals(lambda x: x * airy_ai(x) ** 2, tail_edges).sum()
    q_tail = _panel_integrals(airy_ai, tail_edges).sum()
    # cumulative from the top: U(s) = int_s^inf q^2 etc.
    u = q2_top + q2_tail + np.concatenate([[0.0], q2[::-1]]).cumsum()[::-1]
    v = xq2_top + xq2_tail + np.concatenate([[0.0], xq2[::-1]]).cumsum()[::-1]
    j = q_top + q_tail + np.concatenate([[0.0], qint[::-1]]).cumsum()[::-1]
    neg_log_f2 = v - grid * u
    return neg_log_f2, j


@functools.lru_cache(maxsize=4)
def tw_distribution(beta: int, check_points: int = 25) -> TWDistribution:
    """Build the tabulated TW_beta CDF with a dual-method accuracy estimate."""
    if beta not in (1, 2):
        raise ValueError(f"beta must be 1 or 2, got {beta}")
    grid = np.linspace(S_LEFT, S_RIGHT, GRID_POINTS)
    neg_log_f2, intq = _log_f2_and_intq(grid)
    f2 = np.exp(-neg_log_f2)
    if beta == 2:
        cdf = f2
    else:
        cdf = np.exp(-0.5 * intq) * np.sqrt(f2)
    cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
    check = np.linspace(-8.0, 4.0, check_points)
    fred = np.array([tw_cdf_fredholm(beta, s) for s in check])
    interp = PchipInterpolator(grid, cdf)
    accuracy = float(np.max(np.abs(interp(check) - fred)))
    return TWDistribution(beta=beta, grid=grid, cdf=cdf, accuracy=accuracy, method="painleve")


def tw_cdf(beta: int, s):
    """Tracy-Widom CDF F_beta(s) from the cached Painleve table."""
    return tw_distribution(beta).cdf_at(s)


def tw_cdf_fredholm(beta: int, s: float, m: int = 60, upper: float = 10.0) -> float:
    """Cross-check oracle: Nystrom Fredholm determinant on (s, infinity).

    beta = 2 uses the Airy kernel; beta = 1 the rank-reduced kernel
    Ai((x+y)/2)/2.  Quadrature order m in [30, 80].
    """
    if beta not in (1, 2):
        raise ValueError(f"beta must be 1 or 2, got {beta}")
    if not 30 <= m <= 80:
        raise ValueError(f"quadrature order {m} outside [30, 80]")
    xg, wg = leggauss(m)
    a, b = s, max(upper, s + 2.0)
    x = 0.5 * (b - a) * xg + 0.5 * (a + b)
    w = 0.5 * (b - a) * wg
    if beta == 2:
        ai, aip = airy_both(x)
        num = ai[:, None] * aip[None, :] - aip[:, None] * ai[None, :]
        dx = x[:, None] - x[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            k = num / dx
        k[np.diag_indices(m)] = aip**2 - x * ai**2
    else:
        k = 0.5 * airy_ai(0.5 * (x[:, None] + x[None, :]))
    sw = np.sqrt(w)
    mat = np.eye(m) - sw[:, None] * k * sw[None, :]
    sign, logdet = np.linalg.slogdet(mat)
    if sign <= 0:
        raise FloatingPointError(f"determinant underflow/sign flip, log|det| = {logdet}")
    return float(sign * np.exp(logdet))


def tw_mean_fredholm(beta: int, m: int = 80) -> float:
    """E[TW_beta] computed entirely from the Fredholm oracle."""
    xg, wg = leggauss(60)

    def integral(a, b, f):
        x = 0.5 * (b - a) * xg + 0.5 * (a + b)
        return float(np.sum(wg * np.array([f(v) for v in x])) * 0.5 * (b - a))

    neg = integral(S_LEFT, 0.0, lambda s: tw_cdf_fredholm(beta, s, m=m))
    pos = integral(0.0, S_RIGHT, lambda s: 1.0 - tw_cdf_fredholm(beta, s, m=m))
    return -neg + pos


def write_table_csv(path) -> None:
    """Emit the (s, F1, F2) table as CSV."""
    t1 = tw_distribution(1)
    t2 = tw_distribution(2)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "f1", "f2"])
        for s, f1, f2 in zip(t1.grid, t1.cdf, t2.cdf):
            writer.writerow([repr(float(s)), repr(float(f1)), repr(float(f2))])
