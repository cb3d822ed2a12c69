"""Variance profile matrices: construction, validation and the centered matrix T.

A variance profile is a symmetric doubly stochastic matrix S whose entries
are the variances of the matrix elements of a generalized Wigner matrix.
All constructors here return exactly balanced profiles; the centered matrix
T = S - (1/N) J carries the spectral-gap information used by the flow
experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COLUMN_SUM_TOL = 1e-12
GAP_SLACK = 1e-8


class ProfileError(ValueError):
    """Raised for invalid profile parameters or failed validation."""


class BalancingFailure(ProfileError):
    """Sinkhorn balancing did not reach the target residual."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Sinkhorn balancing stalled at residual {residual:.3e} "
            f"after {iterations} sweeps"
        )


@dataclass(frozen=True)
class VarianceProfile:
    """Symmetric doubly stochastic variance matrix with uniform entry bounds.

    ``entries[i, j]`` is the variance of the (i, j) matrix element, so each
    entry is of order 1/n.  ``c_inf`` and ``c_sup`` bound ``n * entries``
    from below and above.  ``doubly_stochastic`` is False only for the
    diagonal-doubled modification used by the Gaussian flow endpoints.
    """

    n: int
    entries: np.ndarray
    c_inf: float
    c_sup: float
    doubly_stochastic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=float))
        self.entries.setflags(write=False)

    def validate(self) -> None:
        """Check symmetry, column sums, entry bounds and the spectral gap."""
        s = self.entries
        if s.shape != (self.n, self.n):
            raise ProfileError(f"shape {s.shape} does not match n={self.n}")
        if not np.array_equal(s, s.T):
            raise ProfileError("profile is not exactly symmetric")
        if np.any(s < 0):
            raise ProfileError("profile has negative entries")
        if self.doubly_stochastic:
            col_err = np.max(np.abs(s.sum(axis=0) - 1.0))
            if col_err > COLUMN_SUM_TOL:
                raise ProfileError(f"column sums deviate by {col_err:.3e}")
        scaled = self.n * s
        if scaled.min() < self.c_inf - 1e-9 or scaled.max() > self.c_sup + 1e-9:
            raise ProfileError(
                f"entry bounds violated: n*S in "
                f"[{scaled.min():.6g}, {scaled.max():.6g}], "
                f"declared [{self.c_inf}, {self.c_sup}]"
            )
        if self.doubly_stochastic:
            lam = np.linalg.eigvalsh(s)
            if abs(lam[-1] - 1.0) > 1e-9:
                raise ProfileError(f"top eigenvalue {lam[-1]} != 1")
            second = lam[-2] if self.n > 1 else -np.inf
            if second > 1.0 - self.c_inf + GAP_SLACK:
                raise ProfileError(
                    f"spectral gap violated: lambda_2 = {second:.6g} > "
                    f"{1.0 - self.c_inf:.6g}"
                )

    def to_csv(self, path) -> None:
        """Write the profile as rows ``i,j,s_ij``."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("i,j,s_ij\n")
            for i in range(self.n):
                for j in range(self.n):
                    fh.write(f"{i},{j},{self.entries[i, j]!r}\n")


@dataclass(frozen=True)
class CenteredProfile:
    """The centered matrix T = S - J/N together with its gap constants.

    ``c0`` is 1 minus the second-largest eigenvalue modulus of S (clamped to
    [c_inf, 1]); ``c_big`` is the max-norm constant 2*(c_sup + 1) bounding
    ``N * max |T^k|``.
    """

    t_matrix: np.ndarray
    c0: float
    c_big: float
    spectrum: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.t_matrix.shape[0]


def make_flat_profile(n: int) -> VarianceProfile:
    """Homogeneous profile S_ij = 1/n, the classical Wigner case."""
    if n < 2:
        raise ProfileError(f"dimension must be >= 2, got {n}")
    entries = np.full((n, n), 1.0 / n)
    return VarianceProfile(n=n, entries=entries, c_inf=1.0, c_sup=1.0)


def make_block_profile(
    n: int, k_blocks: int, within: float, between: float
) -> VarianceProfile:
    """Two-valued profile of a balanced block model with k equal blocks.

    ``within`` and ``between`` are the entry values inside and across
    blocks.  The column-sum constraint (n/k)*within + n*(k-1)/k*between = 1
    must hold up to 1e-12.
    """
    if n < 2 or k_blocks < 1 or n % k_blocks != 0:
        raise ProfileError(f"n={n} not divisible into {k_blocks} blocks")
    if within <= 0 or between <= 0:
        raise ProfileError("block values must be strictly positive")
    m = n // k_blocks
    col_sum = m * within + (k_blocks - 1) * m * between
    if abs(col_sum - 1.0) > 1e-12:
        raise ProfileError(
            f"column sum {col_sum!r} != 1; choose within/between consistently"
        )
    entries = np.full((n, n), between)
    for b in range(k_blocks):
        entries[b * m : (b + 1) * m, b * m : (b + 1) * m] = within
    # force exact symmetry bit-for-bit (already symmetric by construction)
    return VarianceProfile(
        n=n,
        entries=entries,
        c_inf=n * min(within, between),
        c_sup=n * max(within, between),
    )


def block_profile_for_bounds(n: int, k_blocks: int, low: float, high: float) -> VarianceProfile:
    """Block profile whose scaled entries n*S take the values {low, high}.

    Solves the column-sum constraint for ``within``/``between``; the larger
    value is placed inside the blocks.
    """
    m = n // k_blocks
    # m*within + (k-1)*m*between = 1 with n*within = high, n*between = low
    within, between = high / n, low / n
    col = m * within + (k_blocks - 1) * m * between
    if abs(col - 1.0) > 1e-9:
        # rescale to hit the constraint exactly while keeping the ratio
        within, between = within / col, between / col
    # snap to an exactly summable pair
    between = (1.0 - m * within) / ((k_blocks - 1) * m)
    return make_block_profile(n, k_blocks, within, between)


def sinkhorn_balance(
    kernel: np.ndarray, tol: float = 1e-12, max_iters: int = 10_000
) -> np.ndarray:
    """Symmetrically scale a positive symmetric kernel to doubly stochastic.

    Finds d > 0 with diag(d) K diag(d) doubly stochastic via the damped
    fixed-point d <- sqrt(d / (K d)).  Raises BalancingFailure if the row-sum
    residual does not drop below ``tol``.
    """
    k = np.asarray(kernel, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ProfileError("kernel must be square")
    if np.any(k <= 0):
        raise ProfileError("Sinkhorn balancing requires a strictly positive kernel")
    if not np.allclose(k, k.T, atol=0, rtol=0):
        raise ProfileError("kernel must be symmetric")
    d = 1.0 / np.sqrt(k.sum(axis=1))
    residual = np.inf
    for it in range(max_iters):
        kd = k @ d
        residual = np.max(np.abs(d * kd - 1.0))
        if residual < tol:
            break
        d = np.sqrt(d / kd)
    else:
        raise BalancingFailure(residual, max_iters)
    s = (d[:, None] * k) * d[None, :]
    s = 0.5 * (s + s.T)
    return s


def make_banded_floor_profile(n: int, bandwidth: int, floor: float) -> VarianceProfile:
    """Circulant-band profile with a uniform floor keeping n*S bounded below.

    The profile is the convex combination of the flat profile and the
    row-normalized circulant band indicator (circular distance < bandwidth),
    so off-band entries equal ``floor`` exactly.  The result is run through
    the Sinkhorn balancer as a residual check.
    """
    if n < 2 or bandwidth < 1:
        raise ProfileError(f"invalid n={n} or bandwidth={bandwidth}")
    if floor <= 0 or n * floor >= 1.0 + 1e-15:
        raise ProfileError(f"floor {floor} must satisfy 0 < n*floor <= 1")
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :])
    dist = np.minimum(dist, n - dist)
    band = (dist < bandwidth).astype(float)
    band /= band.sum(axis=1)[0]
    weight = min(n * floor, 1.0)
    entries = weight / n + (1.0 - weight) * band
    if weight < 1.0:
        entries = sinkhorn_balance(entries)
    return VarianceProfile(
        n=n,
        entries=entries,
        c_inf=n * entries.min(),
        c_sup=n * entries.max(),
    )


def modified_profile(s: VarianceProfile) -> VarianceProfile:
    """Diagonal-doubled profile used for the Gaussian flow endpoints.

    Off-diagonal entries are unchanged and the diagonal is doubled; the
    result is flagged as not doubly stochastic.
    """
    entries = s.entries.copy()
    entries[np.diag_indices(s.n)] *= 2.0
    return VarianceProfile(
        n=s.n,
        entries=entries,
        c_inf=s.c_inf,
        c_sup=2.0 * s.c_sup,
        doubly_stochastic=False,
    )


def centered_profile(s: VarianceProfile) -> CenteredProfile:
    """T = S - J/N with the gap constant from the actual spectrum of S."""
    if not s.doubly_stochastic:
        raise ProfileError("centered profile requires a doubly stochastic input")
    n = s.n
    t = s.entries - 1.0 / n
    lam = np.linalg.eigvalsh(s.entries)
    sub = np.abs(lam[:-1]) if n > 1 else np.array([0.0])
    second = sub.max() if sub.size else 0.0
    c0 = float(np.clip(1.0 - second, s.c_inf, 1.0))
    return CenteredProfile(
        t_matrix=t,
        c0=c0,
        c_big=2.0 * (s.c_sup + 1.0),
        spectrum=lam,
    )


def time_profile(s: VarianceProfile, t: float) -> VarianceProfile:
    """Interpolated profile S(t) = exp(-t)/N + (1 - exp(-t)) S."""
    if t < 0:
        raise ProfileError(f"time must be nonnegative, got {t}")
    w = np.exp(-t)
    entries = w / s.n + (1.0 - w) * s.entries
    scaled_min = s.n * entries.min()
    scaled_max = s.n * entries.max()
    return VarianceProfile(
        n=s.n,
        entries=entries,
        c_inf=min(scaled_min, 1.0),
        c_sup=max(scaled_max, 1.0),
    )


def power_threshold(c0: float, n: int, gamma: float = 10.0) -> int:
    """Smallest K with (1 - c0)^K <= N^-gamma."""
    if not 0 < c0 <= 1:
        raise ProfileError(f"gap constant must be in (0, 1], got {c0}")
    if c0 == 1.0:
        return 1
    return int(np.ceil(-gamma * np.log(n) / np.log(1.0 - c0)))
