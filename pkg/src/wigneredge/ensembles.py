"""Sampling of generalized Wigner matrices and exact entry cumulants.

Entry laws are parameterized so that the standardized variable sqrt(N) h_ij
has mean 0 and variance 1 exactly.  Sampling is a pure function of
(spec, seed) using counter-based Philox streams, so trials can be generated
in any order on any number of workers with bitwise-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .profile import VarianceProfile, make_flat_profile, modified_profile


class UnsupportedLaw(ValueError):
    """Entry law outside the supported families."""


def make_rng(*seed_parts: int) -> np.random.Generator:
    """Philox generator keyed on a tuple of integers.

    The same tuple always yields the same stream, independent of platform
    word size and of any other stream in flight.
    """
    ss = np.random.SeedSequence(list(seed_parts))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# entry laws


@dataclass(frozen=True)
class EntryLaw:
    """Standardized entry law: mean 0, variance 1 by construction."""

    name: str
    p: float | None = None

    def __post_init__(self):
        if self.name not in ("gaussian", "rademacher", "uniform", "skew_bernoulli"):
            raise UnsupportedLaw(f"unknown entry law {self.name!r}")
        if self.name == "skew_bernoulli":
            if self.p is None or not 0.0 < self.p < 1.0:
                raise UnsupportedLaw("skew_bernoulli requires 0 < p < 1")
        elif self.p is not None:
            raise UnsupportedLaw(f"law {self.name!r} takes no parameter")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.name == "gaussian":
            return rng.standard_normal(size)
        if self.name == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        if self.name == "uniform":
            return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=size)
        p = self.p
        b = (rng.random(size) < p).astype(float)
        return (b - p) / math.sqrt(p * (1.0 - p))

    def moments(self, order: int) -> np.ndarray:
        """Raw moments m_0..m_order of the standardized law, closed form."""
        ks = np.arange(order + 1)
        if self.name == "gaussian":
            m = np.where(ks % 2 == 0, [float(_double_factorial(k - 1)) for k in ks], 0.0)
        elif self.name == "rademacher":
            m = np.where(ks % 2 == 0, 1.0, 0.0)
        elif self.name == "uniform":
            a = math.sqrt(3.0)
            m = np.where(ks % 2 == 0, a**ks / (ks + 1.0), 0.0)
        else:
            p = self.p
            q = 1.0 - p
            hi = math.sqrt(q / p)
            lo = -math.sqrt(p / q)
            m = p * hi**ks + q * lo**ks
        m = np.asarray(m, dtype=float)
        m[0] = 1.0
        return m

    def expect(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """Exact/quadrature expectation of g(X) under the standardized law."""
        if self.name == "rademacher":
            return 0.5 * (float(g(np.array(1.0))) + float(g(np.array(-1.0))))
        if self.name == "skew_bernoulli":
            p = self.p
            q = 1.0 - p
            hi, lo = math.sqrt(q / p), -math.sqrt(p / q)
            return p * float(g(np.array(hi))) + q * float(g(np.array(lo)))
        if self.name == "gaussian":
            x, w = np.polynomial.hermite_e.hermegauss(120)
            return float(np.sum(w * g(x)) / math.sqrt(2.0 * math.pi))
        x, w = np.polynomial.legendre.leggauss(120)
        a = math.sqrt(3.0)
        return float(np.sum(w * g(a * x)) / 2.0)


def _double_factorial(k: int) -> int:
    if k <= 0:
        return 1
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


GAUSSIAN = EntryLaw("gaussian")
RADEMACHER = EntryLaw("rademacher")
UNIFORM = EntryLaw("uniform")


def skew_bernoulli(p: float) -> EntryLaw:
    return EntryLaw("skew_bernoulli", p)


# ---------------------------------------------------------------------------
# cumulants


@dataclass(frozen=True)
class EntryCumulants:
    c2: float
    c3: float
    c4: float
    higher: tuple[float, ...] = ()  # orders 5..8

    def order(self, p: int) -> float:
        if p == 1:
            return 0.0
        if p == 2:
            return self.c2
        if p == 3:
            return self.c3
        if p == 4:
            return self.c4
        if 5 <= p <= 4 + len(self.higher):
            return self.higher[p - 5]
        raise ValueError(f"cumulant order {p} not tabulated")


def moments_to_cumulants(moments: np.ndarray) -> np.ndarray:
    """Convert raw moments m_0..m_n (m_0 = 1) to cumulants c_1..c_n."""
    n = len(moments) - 1
    c = np.zeros(n + 1)
    for order in range(1, n + 1):
        acc = moments[order]
        for k in range(1, order):
            acc -= math.comb(order - 1, k - 1) * c[k] * moments[order - k]
        c[order] = acc
    return c[1:]


def cumulants(entry_law: EntryLaw, max_order: int = 8) -> EntryCumulants:
    """Closed-form cumulants of the standardized entry law up to order 8."""
    c = moments_to_cumulants(entry_law.moments(max_order))
    return EntryCumulants(
        c2=float(c[1]),
        c3=float(c[2]),
        c4=float(c[3]),
        higher=tuple(float(v) for v in c[4:]),
    )


# ---------------------------------------------------------------------------
# ensemble specification and sampling


@dataclass(frozen=True)
class EnsembleSpec:
    """Symmetry class, entry laws and variance profile of an ensemble.

    The diagonal law is real also for beta = 2 (the invariant-ensemble
    convention); its variance is the diagonal of the profile.
    """

    beta: int
    profile: VarianceProfile
    entry_law: EntryLaw = GAUSSIAN
    diagonal_law: EntryLaw | None = field(default=None)

    def __post_init__(self):
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta}")

    @property
    def diag_law(self) -> EntryLaw:
        return self.diagonal_law if self.diagonal_law is not None else self.entry_law

    @property
    def n(self) -> int:
        return self.profile.n


def sample_matrix(spec: EnsembleSpec, seed) -> np.ndarray:
    """Draw one Hermitian matrix; deterministic in (spec, seed).

    ``seed`` may be an int, a tuple of ints, or a numpy Generator (the
    latter for callers managing their own streams).
    """
    rng = _as_rng(seed)
    n = spec.n
    s = spec.profile.entries
    iu = np.triu_indices(n, 1)
    sig = np.sqrt(s[iu])
    m = len(sig)
    if spec.beta == 1:
        off = sig * spec.entry_law.sample(rng, m)
        h = np.zeros((n, n))
    else:
        re = spec.entry_law.sample(rng, m)
        im = spec.entry_law.sample(rng, m)
        off = sig / math.sqrt(2.0) * (re + 1j * im)
        h = np.zeros((n, n), dtype=complex)
    h[iu] = off
    h = h + h.conj().T
    diag = np.sqrt(np.diag(s)) * spec.diag_law.sample(rng, n)
    h[np.diag_indices(n)] = diag
    return h


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return make_rng(*seed)
    return make_rng(int(seed))


def goe_spec(n: int) -> EnsembleSpec:
    """GOE: flat profile with doubled diagonal, Gaussian entries."""
    return EnsembleSpec(beta=1, profile=modified_profile(make_flat_profile(n)))


def gue_spec(n: int) -> EnsembleSpec:
    """GUE: flat profile, complex Gaussian entries, real Gaussian diagonal."""
    return EnsembleSpec(beta=2, profile=make_flat_profile(n))


def sample_goe(n: int, seed) -> np.ndarray:
    return sample_matrix(goe_spec(n), seed)


def sample_gue(n: int, seed) -> np.ndarray:
    return sample_matrix(gue_spec(n), seed)


# ---------------------------------------------------------------------------
# cumulant expansion check: the identity E[h f(h)] = sum_p c^(p+1)/p! E[f^(p)(h)]


@dataclass(frozen=True)
class SmoothFunction:
    """Test function with analytic derivatives up to any requested order."""

    name: str

    def deriv(self, p: int) -> Callable[[np.ndarray], np.ndarray]:
        if self.name == "sin":
            return [np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)][p % 4]
        if self.name == "rational":
            # f = 1/(1+x^2); f^(p) = P_p(x) / (1+x^2)^{p+1} with polynomial
            # recurrence P_{p+1} = P_p' (1+x^2) - 2(p+1) x P_p
            poly = np.polynomial.Polynomial([1.0])
            base = np.polynomial.Polynomial([1.0, 0.0, 1.0])
            for k in range(p):
                poly = poly.deriv() * base - 2.0 * (k + 1) * np.polynomial.Polynomial([0.0, 1.0]) * poly
            return lambda x, _poly=poly, _p=p: _poly(x) / (1.0 + x * x) ** (_p + 1)
        raise ValueError(f"unknown test function {self.name!r}")

    def __call__(self, x):
        return self.deriv(0)(x)


SIN = SmoothFunction("sin")
RATIONAL = SmoothFunction("rational")


@dataclass(frozen=True)
class ExpansionReport:
    lhs: float
    lhs_stderr: float
    rhs: float
    residual: float
    sigma_distance: float


class InsufficientSamples(RuntimeError):
    pass


def verify_cumulant_expansion(
    entry_law: EntryLaw,
    f: SmoothFunction,
    l: int,
    scale: float = 0.1,
    n_samples: int = 200_000,
    seed: int = 0,
) -> ExpansionReport:
    """Monte-Carlo check of the cumulant expansion of E[h f(h)].

    ``h = scale * X`` with X the standardized law.  The truncated sum uses
    closed-form cumulants and quadrature expectations of the derivatives.
    """
    if l > 6:
        raise ValueError("truncation order limited to l <= 6")
    if n_samples < 1000:
        raise InsufficientSamples(f"{n_samples} samples cannot give a usable CI")
    rng = make_rng(seed, 0xC0FFEE)
    x = entry_law.sample(rng, n_samples)
    h = scale * x
    vals = h * f(h)
    lhs = float(vals.mean())
    lhs_se = float(vals.std(ddof=1) / math.sqrt(n_samples))
    cum = cumulants(entry_law)
    rhs = 0.0
    for p1 in range(1, l + 1):  # p1 = p + 1
        p = p1 - 1
        c = cum.order(p1) * scale**p1 if p1 >= 2 else 0.0
        if c == 0.0:
            continue
        fp = f.deriv(p)
        rhs += c / math.factorial(p) * entry_law.expect(lambda u: fp(scale * u))
    residual = lhs - rhs
    sigma = abs(residual) / lhs_se if lhs_se > 0 else math.inf
    return ExpansionReport(lhs, lhs_se, rhs, residual, sigma)
