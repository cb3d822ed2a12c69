"""Closed-form semicircle analytics and the edge spectral domains.

Stieltjes transform m_sc solving m^2 + z m + 1 = 0 with Im m > 0, the
semicircle density/CDF on [-2, 2], classical eigenvalue locations, and the
membership tests for the global and edge spectral-parameter domains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Spectral parameter outside the supported domain."""


def m_sc(z):
    """Stieltjes transform of the semicircle law on the upper half plane.

    Picks the root of m^2 + z m + 1 = 0 with positive imaginary part by an
    explicit test on both quadratic roots (robust across the branch cut at
    E = +-2).
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise DomainError("m_sc requires Im z > 0")
    disc = np.sqrt(z * z - 4.0)
    r1 = 0.5 * (-z + disc)
    r2 = 0.5 * (-z - disc)
    m = np.where(r1.imag > 0, r1, r2)
    return m if m.ndim else complex(m)


def sc_density(x):
    """Semicircle density sqrt(4 - x^2) / (2 pi) on [-2, 2]."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 2.0
    rho = np.where(inside, np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi), 0.0)
    return rho if rho.ndim else float(rho)


def sc_cdf(x):
    """CDF of the semicircle law; 0 below -2 and 1 above 2."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -2.0, 2.0)
    val = 0.5 + xc * np.sqrt(np.clip(4.0 - xc * xc, 0.0, None)) / (4.0 * np.pi) \
        + np.arcsin(xc / 2.0) / np.pi
    val = np.clip(val, 0.0, 1.0)
    return val if val.ndim else float(val)


def classical_location(j: int, n: int) -> float:
    """Classical location gamma_j with semicircle mass j/n below it.

    Newton iteration with a bisection bracket; the initial guess uses the
    edge asymptotics mass ~ (2 - |x|)^{3/2} near +-2.
    """
    if not 1 <= j <= n:
        raise ValueError(f"index j={j} outside 1..{n}")
    target = j / n
    if j == n:
        return 2.0
    # initial guess: symmetric middle -> linearized; near edges -> 3/2-power law
    if target < 0.1:
        x = -2.0 + (3.0 * np.pi * target / np.sqrt(2.0)) ** (2.0 / 3.0)
    elif target > 0.9:
        x = 2.0 - (3.0 * np.pi * (1.0 - target) / np.sqrt(2.0)) ** (2.0 / 3.0)
    else:
        x = np.pi * (target - 0.5)
    lo, hi = -2.0, 2.0
    for _ in range(100):
        f = sc_cdf(x) - target
        if f > 0:
            hi = x
        else:
            lo = x
        d = sc_density(x)
        step = f / d if d > 1e-12 else 0.0
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-15 and abs(f) < 1e-12:
            x = x_new
            break
        x = x_new
    return float(x)


@dataclass(frozen=True)
class EdgeDomainSpec:
    """Parameters of the edge spectral domain near E = 2.

    Membership means -c1 * N^{-2/3} <= E - 2 <= c2 * N^{-2/3+epsilon} and
    N^{-1+epsilon} <= eta <= N^{-2/3-epsilon}.
    """

    n: int
    epsilon: float = 0.05
    c1: float = 1.0
    c2: float = 1.0

    @property
    def eta_min(self) -> float:
        return self.n ** (-1.0 + self.epsilon)

    @property
    def eta_max(self) -> float:
        return self.n ** (-2.0 / 3.0 - self.epsilon)

    @property
    def e_min(self) -> float:
        return 2.0 - self.c1 * self.n ** (-2.0 / 3.0)

    @property
    def e_max(self) -> float:
        return 2.0 + self.c2 * self.n ** (-2.0 / 3.0 + self.epsilon)


def in_global_domain(z: complex, n: int, epsilon: float = 0.05) -> bool:
    """Membership in the global domain |E| <= 5, N^{-1+eps} <= eta <= 10."""
    return abs(z.real) <= 5.0 and n ** (-1.0 + epsilon) <= z.imag <= 10.0


def in_edge_domain(z: complex, spec: EdgeDomainSpec) -> bool:
    """Membership in the edge domain defined by ``spec``."""
    e, eta = z.real, z.imag
    return (
        spec.e_min <= e <= spec.e_max
        and spec.eta_min <= eta <= spec.eta_max
        and in_global_domain(z, spec.n, spec.epsilon)
    )


def edge_grid(spec: EdgeDomainSpec, n_e: int, n_eta: int) -> list[complex]:
    """Rectangular grid over the edge domain: linear in E, log-spaced in eta."""
    if n_e < 1 or n_eta < 1:
        raise ValueError("grid counts must be positive")
    es = np.linspace(spec.e_min, spec.e_max, n_e)
    etas = np.geomspace(spec.eta_min, spec.eta_max, n_eta)
    return [complex(e, eta) for eta in etas for e in es]


def kappa(e: float) -> float:
    """Distance of the energy E to the nearest spectral edge."""
    return min(abs(e - 2.0), abs(e + 2.0))
