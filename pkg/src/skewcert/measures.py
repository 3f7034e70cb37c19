"""Finite-atom conditional measures, correlation norms, and SRB sampling.

The fiber measure over x is approximated by the pushforward of the uniform
measure on depth-N digit strings; everything downstream ((rho, rho')_r,
the aggregate I_r, local-dimension regressions) has an exact closed form
on atomic measures, so no binning enters except in the SRB histogram.
This lane is plain float/numpy: rigor lives in the truncation-radius
bookkeeping, not in the arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .series import SystemParams, Word, check_word, tail_value


@dataclass
class AtomicMeasure:
    """Sorted atom locations with masses summing to one, plus the depth-N
    truncation radius every atom location is accurate to."""

    locs: np.ndarray
    masses: np.ndarray
    depth: int
    blur: float

    def __post_init__(self):
        if self.locs.shape != self.masses.shape:
            raise ValueError("locations and masses must align")
        total = float(self.masses.sum())
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"masses must sum to 1, got {total}")

    @property
    def n_atoms(self) -> int:
        return int(self.locs.size)


def _psi_np(params: SystemParams, x: np.ndarray) -> np.ndarray:
    return params.psi.eval_np(x)


def sample_mx(
    params: SystemParams,
    x: float,
    depth: int,
    mode: str = "exact",
    n_samples: int | None = None,
    seed: int | None = None,
    atom_budget: int = 4_000_000,
) -> AtomicMeasure:
    """Atoms of the depth-N approximation of the fiber measure over x.

    "exact" enumerates all b^N digit strings (mass b^-N each); "mc" draws
    n_samples uniform strings with a seeded generator (mass 1/n each).
    """
    b = params.b
    gamma = params.gamma
    if mode == "exact":
        n_atoms = b**depth
        if n_atoms > atom_budget:
            raise ValueError(
                f"b^depth = {n_atoms} atoms exceeds the budget {atom_budget}"
            )
        z = np.array([float(x)])
        acc = np.zeros(1)
        digits = np.arange(b, dtype=float)
        g = 1.0
        for _ in range(depth):
            z = ((z[:, None] + digits) / b).ravel()
            acc = np.repeat(acc, b) + g * _psi_np(params, z)
            g *= gamma
        masses = np.full(acc.size, 1.0 / n_atoms)
    elif mode == "mc":
        if not n_samples or n_samples < 1:
            raise ValueError("mc mode wants n_samples >= 1")
        rng = np.random.default_rng(seed)
        z = np.full(n_samples, float(x))
        acc = np.zeros(n_samples)
        g = 1.0
        for _ in range(depth):
            z = (z + rng.integers(0, b, size=n_samples)) / b
            acc += g * _psi_np(params, z)
            g *= gamma
        masses = np.full(n_samples, 1.0 / n_samples)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    order = np.argsort(acc, kind="stable")
    return AtomicMeasure(acc[order], masses[order], depth, tail_value(params, depth))


def corr_sq_norm(mu: AtomicMeasure, r: float) -> float:
    """Exact ||mu||_r^2 = sum_{a,b} m_a m_b max(0, 2r - |loc_a - loc_b|)."""
    if r <= 0:
        raise ValueError("r must be positive")
    locs = mu.locs
    m = mu.masses
    two_r = 2.0 * r
    lo = np.searchsorted(locs, locs - two_r, side="left")
    hi = np.searchsorted(locs, locs + two_r, side="right")
    idx = np.arange(locs.size)
    pm = np.concatenate(([0.0], np.cumsum(m)))
    pml = np.concatenate(([0.0], np.cumsum(m * locs)))
    # left neighbours j <= i: sum m_j (2r - (l_i - l_j))
    left = (two_r - locs) * (pm[idx + 1] - pm[lo]) + (pml[idx + 1] - pml[lo])
    # right neighbours j > i: sum m_j (2r - (l_j - l_i))
    right = (two_r + locs) * (pm[hi] - pm[idx + 1]) - (pml[hi] - pml[idx + 1])
    return float(np.sum(m * (left + right)))


@dataclass(frozen=True)
class FiberAffine:
    """y -> scale * y + offset, the fiber action of q steps of the skew map."""

    scale: float
    offset: float
    q: int

    def apply(self, mu: AtomicMeasure) -> AtomicMeasure:
        locs = self.scale * mu.locs + self.offset
        if self.scale < 0:
            locs = locs[::-1]
        return AtomicMeasure(locs, mu.masses.copy(), mu.depth, mu.blur * abs(self.scale))


def fiber_affine(params: SystemParams, x: float, w: Word) -> FiberAffine:
    """Affine fiber map carrying the measure over x(w) onto its slot in the
    self-similar decomposition of the measure over x."""
    w = check_word(params.b, w)
    q = len(w)
    gamma = params.gamma
    z = float(x)
    offset = 0.0
    g = 1.0
    for d in w:
        z = (z + d) / params.b
        offset += g * float(_psi_np(params, np.array([z]))[0])
        g *= gamma
    return FiberAffine(gamma**q, offset, q)


def vertical_scaling_check(
    mu: AtomicMeasure, params: SystemParams, q: int, r: float
) -> tuple[float, float]:
    """Both sides of ||T^q mu||_r^2 = gamma^q ||mu||_{gamma^-q r}^2 (offset-free:
    the correlation form is translation invariant)."""
    scale = params.gamma**q
    pushed = FiberAffine(scale, 0.0, q).apply(mu)
    lhs = corr_sq_norm(pushed, r)
    rhs = scale * corr_sq_norm(mu, r / scale)
    return lhs, rhs


@dataclass
class IrEstimate:
    value: float
    r: float
    depth: int
    grid: int
    truncation_warning: bool


def i_r_estimate(
    params: SystemParams,
    r: float,
    grid: int,
    depth: int,
    omega=None,
    mode: str = "exact",
    n_samples: int | None = None,
    seed: int | None = None,
) -> IrEstimate:
    """Midpoint-rule estimate of I_r = (1/r^2) int omega(x) ||m_x||_r^2 dx."""
    return i_r_table(
        params, [r], grid, depth, omega=omega, mode=mode, n_samples=n_samples, seed=seed
    )[0]


def i_r_table(
    params: SystemParams,
    radii,
    grid: int,
    depth: int,
    omega=None,
    mode: str = "exact",
    n_samples: int | None = None,
    seed: int | None = None,
) -> list[IrEstimate]:
    """I_r estimates for several radii, building each fiber measure once."""
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    blur = tail_value(params, depth)
    acc = [0.0] * len(radii)
    for j in range(grid):
        x = (j + 0.5) / grid
        mu = sample_mx(params, x, depth, mode=mode, n_samples=n_samples, seed=seed)
        w = 1.0 if omega is None else float(omega(x))
        for i, r in enumerate(radii):
            acc[i] += w * corr_sq_norm(mu, r)
    return [
        IrEstimate(acc[i] / (grid * r * r), r, depth, grid, r <= blur)
        for i, r in enumerate(radii)
    ]


@dataclass
class RegressionResult:
    slope: float
    ci_low: float
    ci_high: float
    radii: np.ndarray
    log_means: np.ndarray
    n_centers: int


def _ols_slope_ci(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and its 95% half-width from the residuals."""
    n = xs.size
    xbar = xs.mean()
    ybar = ys.mean()
    sxx = float(np.sum((xs - xbar) ** 2))
    slope = float(np.sum((xs - xbar) * (ys - ybar)) / sxx)
    intercept = ybar - slope * xbar
    resid = ys - (intercept + slope * xs)
    if n > 2:
        se = math.sqrt(float(np.sum(resid**2)) / (n - 2) / sxx)
    else:
        se = 0.0
    return slope, 1.96 * se


def ball_masses(mu: AtomicMeasure, centers: np.ndarray, r: float) -> np.ndarray:
    """mu(B(y, r)) for each center y (closed balls)."""
    pm = np.concatenate(([0.0], np.cumsum(mu.masses)))
    lo = np.searchsorted(mu.locs, centers - r, side="left")
    hi = np.searchsorted(mu.locs, centers + r, side="right")
    return pm[hi] - pm[lo]


def local_dim_regress(
    mu: AtomicMeasure,
    radii,
    n_centers: int = 100,
    seed: int | None = None,
) -> RegressionResult:
    """Slope of log mu(B(y, r)) against log r, averaged over mass-sampled
    centers; errors if the radii dip under the truncation blur or the
    measure is degenerate."""
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    if radii.size < 2:
        raise ValueError("need at least two radii")
    if radii[-1] <= mu.blur:
        raise ValueError(
            f"smallest radius {radii[-1]} is inside the truncation blur {mu.blur}"
        )
    if mu.n_atoms < 2 or float(mu.locs[-1] - mu.locs[0]) == 0.0:
        raise ValueError("degenerate measure: local dimension undefined")
    rng = np.random.default_rng(seed)
    centers = rng.choice(mu.locs, size=n_centers, p=mu.masses / mu.masses.sum())
    log_means = np.empty(radii.size)
    for i, r in enumerate(radii):
        masses = ball_masses(mu, centers, float(r))
        if np.any(masses <= 0.0):
            raise ValueError("empty ball encountered; radii too small for the sample")
        log_means[i] = float(np.mean(np.log(masses)))
    xs = np.log(radii)
    slope, half = _ols_slope_ci(xs, log_means)
    return RegressionResult(slope, slope - half, slope + half, radii, log_means, n_centers)


@dataclass
class SRBHistogram:
    counts: np.ndarray
    x_edges: np.ndarray
    y_edges: np.ndarray
    seed: int
    n_points: int
    n_iter: int
    burn_in: int
    rng_kind: str = "numpy PCG64"

    def column_marginal(self) -> np.ndarray:
        total = self.counts.sum()
        return self.counts.sum(axis=1) / total

    def column_profile(self, j: int) -> np.ndarray:
        col = self.counts[j].astype(float)
        s = col.sum()
        return col / s if s > 0 else col


def srb_sample(
    params: SystemParams,
    n_points: int,
    n_iter: int,
    burn_in: int,
    seed: int,
    bins: tuple[int, int] = (64, 64),
) -> SRBHistogram:
    """Histogram of post-burn-in orbits of (x, y) -> (b x mod 1, gamma y + psi(x))."""
    if n_iter <= burn_in:
        raise ValueError("n_iter must exceed burn_in")
    rng = np.random.default_rng(seed)
    y_max = max(params.psi_sup / (1.0 - params.gamma), 1e-9)  # psi = 0 degenerates
    x = rng.random(n_points)
    y = np.zeros(n_points)
    nx, ny = bins
    x_edges = np.linspace(0.0, 1.0, nx + 1)
    y_edges = np.linspace(-y_max, y_max, ny + 1)
    counts = np.zeros((nx, ny), dtype=np.int64)
    noise = 2.0**-45  # refresh the bits float doubling shifts out, else
    # every orbit of b x mod 1 collapses onto 0 after ~53 steps
    for it in range(n_iter):
        y = params.gamma * y + _psi_np(params, x)
        x = (params.b * x + noise * rng.random(n_points)) % 1.0
        if it >= burn_in:
            h, _, _ = np.histogram2d(x, np.clip(y, -y_max, y_max), bins=(x_edges, y_edges))
            counts += h.astype(np.int64)
    return SRBHistogram(counts, x_edges, y_edges, seed, n_points, n_iter, burn_in)
