"""Green functions G(z) = (H - z)^-1 and the resolvent-based diagnostics.

One eigendecomposition per sample is reused across every spectral
parameter; the Ward identity provides an exact (roundoff-level) correctness
oracle for all Green-function entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensembles import EnsembleSpec, make_rng, sample_matrix
from .semicircle import DomainError, EdgeDomainSpec, in_edge_domain, in_global_domain, m_sc


class NumericFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralSample:
    """Eigenvalues (ascending) and optional eigenvectors of one draw."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    seed: tuple | None = None

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def eigen_decompose(h: np.ndarray, vectors: bool = True, seed=None) -> SpectralSample:
    """Dense Hermitian eigendecomposition with machine-precision pairs."""
    h = np.asarray(h)
    if not np.allclose(h, h.conj().T, atol=1e-12, rtol=0):
        raise NumericFailure("input matrix is not Hermitian")
    try:
        if vectors:
            lam, u = np.linalg.eigh(h)
        else:
            lam, u = np.linalg.eigvalsh(h), None
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericFailure(f"eigensolver failed: {exc}") from exc
    return SpectralSample(eigenvalues=lam, eigenvectors=u, seed=seed)


def m_n(sample: SpectralSample, z) -> complex | np.ndarray:
    """Normalized resolvent trace m_N(z) = (1/N) sum_j 1/(lambda_j - z)."""
    z = np.asarray(z, dtype=complex)
    vals = np.mean(1.0 / (sample.eigenvalues[..., :] - z[..., None]), axis=-1)
    return vals if vals.ndim else complex(vals)


def im_m_n(eigenvalues: np.ndarray, e: float, eta: float) -> float:
    """Im m_N(E + i eta) directly from eigenvalues (no eigenvectors needed)."""
    d = eigenvalues - e
    return float(np.mean(eta / (d * d + eta * eta)))


def green_entries(sample: SpectralSample, z: complex, pairs: np.ndarray) -> np.ndarray:
    """Selected resolvent entries G_ij(z) via the spectral decomposition."""
    if z.imag <= 0:
        raise DomainError("green_entries requires Im z > 0")
    if sample.eigenvectors is None:
        raise NumericFailure("eigenvectors required for entrywise G")
    u = sample.eigenvectors
    w = 1.0 / (sample.eigenvalues - z)
    i_idx, j_idx = np.asarray(pairs).T
    return np.einsum("lk,k,lk->l", u[i_idx], w, np.conj(u[j_idx]))


def green_row(sample: SpectralSample, z: complex, i: int) -> np.ndarray:
    """Row i of G(z)."""
    u = sample.eigenvectors
    w = 1.0 / (sample.eigenvalues - z)
    return (u * w) @ u[i].conj()


def green_matrix(sample: SpectralSample, z: complex) -> np.ndarray:
    """Full resolvent G(z); dense, so meant for moderate N."""
    if z.imag <= 0:
        raise DomainError("green_matrix requires Im z > 0")
    if sample.eigenvectors is None:
        raise NumericFailure("eigenvectors required for entrywise G")
    u = sample.eigenvectors
    w = 1.0 / (sample.eigenvalues - z)
    return (u * w) @ u.conj().T


def ward_check(sample: SpectralSample, z: complex, rows: Sequence[int]) -> float:
    """Max relative residual of sum_j |G_ij|^2 = Im G_ii / eta over rows."""
    eta = z.imag
    if eta <= 0:
        raise DomainError("Ward identity requires Im z > 0")
    worst = 0.0
    for i in rows:
        g = green_row(sample, z, i)
        lhs = float(np.sum(np.abs(g) ** 2))
        rhs = float(g[i].imag) / eta
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def generalized_ward_ratio(
    sample: SpectralSample, z: complex, pairs: Sequence[tuple[int, int]]
) -> float:
    """Max over (a, c) of (1/N) sum_b |G_ab G_bc|^2 / (Im m_N / (N eta))."""
    eta = z.imag
    n = sample.n
    envelope = im_m_n(sample.eigenvalues, z.real, eta) / (n * eta)
    worst = 0.0
    for a, c in pairs:
        ga = green_row(sample, z, a)
        gc = green_row(sample, z, c)
        lhs = float(np.mean(np.abs(ga * gc) ** 2))
        worst = max(worst, lhs / envelope)
    return worst


@dataclass(frozen=True)
class LocalLawStats:
    """Per-z ratios of observed deviations to their theoretical envelopes."""

    zs: list
    entry_ratio_q99: np.ndarray
    trace_ratio_q99: np.ndarray
    entry_ratio_max: np.ndarray
    trace_ratio_max: np.ndarray


def locallaw_deviation(
    spec: EnsembleSpec,
    seeds: Sequence,
    z_grid: Sequence[complex],
    epsilon: float = 0.05,
    probe_pairs: int = 200,
) -> LocalLawStats:
    """Deviation statistics |G_ij - delta_ij m_sc| and |m_N - m_sc| over trials.

    Each deviation is divided by its local-law envelope; the returned
    quantiles are taken over trials.
    """
    n = spec.n
    if n < 10:
        raise DomainError("local-law statistics need N >= 10")
    for z in z_grid:
        if not in_global_domain(z, n, epsilon):
            raise DomainError(f"z = {z} outside the global spectral domain")
    rng_pairs = make_rng(1234, n)
    pairs = rng_pairs.integers(0, n, size=(probe_pairs, 2))
    entry_ratios = np.zeros((len(seeds), len(z_grid)))
    trace_ratios = np.zeros((len(seeds), len(z_grid)))
    for ti, seed in enumerate(seeds):
        sample = eigen_decompose(sample_matrix(spec, seed), vectors=True, seed=None)
        for zi, z in enumerate(z_grid):
            eta = z.imag
            msc = m_sc(z)
            env_entry = np.sqrt(msc.imag / (n * eta)) + 1.0 / (n * eta)
            env_trace = 1.0 / (n * eta)
            g = green_matrix(sample, z)
            dev = g - msc * np.eye(n)
            probe = np.abs(dev[pairs[:, 0], pairs[:, 1]])
            diag = np.abs(np.diag(dev))
            entry_ratios[ti, zi] = max(probe.max(), diag.max()) / env_entry
            trace_ratios[ti, zi] = abs(np.trace(g) / n - msc) / env_trace
    return LocalLawStats(
        zs=list(z_grid),
        entry_ratio_q99=np.quantile(entry_ratios, 0.99, axis=0),
        trace_ratio_q99=np.quantile(trace_ratios, 0.99, axis=0),
        entry_ratio_max=entry_ratios.max(axis=0),
        trace_ratio_max=trace_ratios.max(axis=0),
    )


def rigidity_check(sample: SpectralSample, classical: np.ndarray) -> np.ndarray:
    """Normalized gaps |lambda_j - gamma_j| N^{2/3} min(j, N-j+1)^{1/3}."""
    n = sample.n
    j = np.arange(1, n + 1)
    weight = np.minimum(j, n - j + 1) ** (1.0 / 3.0)
    return np.abs(sample.eigenvalues - classical) * n ** (2.0 / 3.0) * weight


def delocalization_check(sample: SpectralSample) -> float:
    """max_j max_i N |u_j(i)|^2; order one for delocalized eigenvectors."""
    if sample.eigenvectors is None:
        raise NumericFailure("eigenvectors required for delocalization check")
    return float(sample.n * np.max(np.abs(sample.eigenvectors) ** 2))


@dataclass(frozen=True)
class EdgeExpectation:
    mean: float
    stderr: float
    scaled_mean: float  # mean * N^(1/3)
    trials: int


def im_mn_edge_expectation(
    spec: EnsembleSpec,
    z: complex,
    trials: int,
    master_seed: int = 0,
    epsilon: float = 0.05,
) -> EdgeExpectation:
    """Monte-Carlo mean of Im m_N(z) for z in the edge domain."""
    n = spec.n
    domain = EdgeDomainSpec(n=n, epsilon=epsilon)
    if not in_edge_domain(z, domain):
        raise DomainError(f"z = {z} outside the edge domain for N = {n}")
    vals = np.empty(trials)
    for t in range(trials):
        h = sample_matrix(spec, (master_seed, t))
        lam = np.linalg.eigvalsh(h)
        vals[t] = im_m_n(lam, z.real, z.imag)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan")
    return EdgeExpectation(mean, se, mean * n ** (1.0 / 3.0), trials)
