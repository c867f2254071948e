"""Clustered angular power spectra and wavenumber-domain channel statistics.

Scattering is a weighted mixture of von Mises-Fisher clusters on the upper
hemisphere.  Each wavenumber lattice index owns a half-open cell in
normalized spatial frequency ``(sin(theta)cos(phi), sin(theta)sin(phi))``;
the per-index coefficient variance is the integral of the power spectrum
over that cell, estimated here by stratified Monte-Carlo with one shared
sample set so that the cell variances sum exactly to the integral over the
union of cells.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .array_geometry import UpaConfig, WavenumberIndex, WavenumberIndexSet
from .dictionaries import Dictionary, wavenumber_dictionary

MIN_MC_SAMPLES = 1_000


@dataclass(frozen=True)
class ClusterSpec:
    """One von Mises-Fisher scattering cluster."""

    weight: float
    concentration: float
    center_elevation: float
    center_azimuth: float

    def __post_init__(self) -> None:
        if self.weight < 0.0:
            raise ValueError("cluster weight must be nonnegative")
        if self.concentration <= 0.0:
            raise ValueError("cluster concentration must be positive")
        if not 0.0 <= self.center_elevation <= np.pi / 2:
            raise ValueError("cluster center elevation must lie in [0, pi/2]")


@dataclass(frozen=True)
class AngularSpectrum:
    """Mixture of clusters; weights must sum to one."""

    clusters: tuple[ClusterSpec, ...]

    def __post_init__(self) -> None:
        total = sum(c.weight for c in self.clusters)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"cluster weights sum to {total}, expected 1")


@dataclass(frozen=True)
class VarianceProfile:
    """Per-index coefficient variances for one index set."""

    index_set: WavenumberIndexSet
    variances: np.ndarray
    mc_samples: int
    seed: int

    def __post_init__(self) -> None:
        if self.variances.shape != (len(self.index_set),):
            raise ValueError("one variance per lattice index required")
        if np.any(self.variances < 0.0):
            raise ValueError("variances must be nonnegative")

    def total(self) -> float:
        return float(np.sum(self.variances))

    def write_csv(self, path) -> None:
        """Dump as CSV with columns lx, ly, variance."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lx", "ly", "variance"])
            for idx, var in zip(self.index_set, self.variances):
                writer.writerow([idx.lx, idx.ly, repr(float(var))])


@dataclass(frozen=True)
class ChannelRealization:
    """Spatial channel and the wavenumber coefficients that synthesized it."""

    spatial: np.ndarray
    wavenumber_coeffs: np.ndarray
    seed: int


def vmf_log_density(theta, phi, cluster: ClusterSpec):
    """Log of the von Mises-Fisher density at direction(s) (theta, phi).

    Evaluated in log space throughout: sinh(a) overflows doubles near
    a ~ 710, so log(sinh(a)) is expanded as a + log(-expm1(-2a)) - log(2).
    """
    a = cluster.concentration
    cos_angle = np.sin(theta) * np.sin(cluster.center_elevation) * np.cos(
        phi - cluster.center_azimuth
    ) + np.cos(theta) * np.cos(cluster.center_elevation)
    log_sinh = a + np.log(-np.expm1(-2.0 * a)) - np.log(2.0)
    return np.log(a) - np.log(4.0 * np.pi) - log_sinh + a * cos_angle


def vmf_density(theta, phi, cluster: ClusterSpec):
    """Von Mises-Fisher density on the sphere; stable for any concentration."""
    return np.exp(vmf_log_density(theta, phi, cluster))


def angular_power(theta, phi, spectrum: AngularSpectrum):
    """Mixture power spectrum: weighted sum of the cluster densities."""
    out = np.zeros(np.broadcast(np.asarray(theta), np.asarray(phi)).shape)
    for cluster in spectrum.clusters:
        out = out + cluster.weight * vmf_density(theta, phi, cluster)
    return out if out.shape else float(out)


def wavenumber_region_contains(
    idx: WavenumberIndex, cfg: UpaConfig, theta, phi
) -> bool | np.ndarray:
    """Whether direction(s) fall in the spatial-frequency cell of ``idx``.

    Cell of ``(lx, ly)`` is the half-open box
    ``[lambda*lx/L_x, lambda*(lx+1)/L_x) x [lambda*ly/L_y, lambda*(ly+1)/L_y)``
    in ``(sin(theta)cos(phi), sin(theta)sin(phi))``; theta is assumed to lie
    in the upper hemisphere ``[0, pi/2]``.  Cells are disjoint, so a
    direction lies in at most one.
    """
    u = np.sin(theta) * np.cos(phi)
    v = np.sin(theta) * np.sin(phi)
    wx = cfg.wavelength / cfg.l_x_len
    wy = cfg.wavelength / cfg.l_y_len
    inside = (
        (u >= idx.lx * wx)
        & (u < (idx.lx + 1) * wx)
        & (v >= idx.ly * wy)
        & (v < (idx.ly + 1) * wy)
    )
    return bool(inside) if np.ndim(inside) == 0 else inside


def _hemisphere_samples(rng: np.random.Generator, n: int):
    """Directions uniform on the upper hemisphere (solid angle 2*pi).

    Draw order is fixed: first ``n`` uniforms give cos(theta), the next
    ``n`` give phi / (2*pi).  Consumers that need to replay the exact
    sample set (shared-sample checks) rely on this order.
    """
    cos_theta = rng.random(n)
    phi = 2.0 * np.pi * rng.random(n)
    theta = np.arccos(cos_theta)
    return theta, phi


def _cell_positions(
    index_set: WavenumberIndexSet, theta: np.ndarray, phi: np.ndarray
) -> np.ndarray:
    """Position of each direction's cell in the index set, -1 if none."""
    cfg = index_set.config
    sin_theta = np.sin(theta)
    u = sin_theta * np.cos(phi)
    v = sin_theta * np.sin(phi)
    ix = np.floor(u * cfg.l_x_len / cfg.wavelength).astype(int)
    iy = np.floor(v * cfg.l_y_len / cfg.wavelength).astype(int)

    idx = index_set.as_array()
    off_x = int(idx[:, 0].min())
    off_y = int(idx[:, 1].min())
    span_x = int(idx[:, 0].max()) - off_x + 1
    span_y = int(idx[:, 1].max()) - off_y + 1
    lookup = np.full((span_x, span_y), -1, dtype=int)
    lookup[idx[:, 0] - off_x, idx[:, 1] - off_y] = np.arange(len(index_set))

    gx = ix - off_x
    gy = iy - off_y
    in_grid = (gx >= 0) & (gx < span_x) & (gy >= 0) & (gy < span_y)
    positions = np.full(theta.shape, -1, dtype=int)
    positions[in_grid] = lookup[gx[in_grid], gy[in_grid]]
    return positions


def integrate_variances(
    spectrum: AngularSpectrum,
    index_set: WavenumberIndexSet,
    mc_samples: int,
    seed: int,
) -> VarianceProfile:
    """Monte-Carlo cell integrals of the power spectrum, shared sample set.

    One uniform-hemisphere sample set is stratified by cell membership, so
    the sum of the per-cell estimates equals (to the last bit) the
    single-pass estimate of the integral over the union of cells.
    Deterministic given ``seed``.
    """
    if mc_samples < MIN_MC_SAMPLES:
        raise ValueError(f"mc_samples must be >= {MIN_MC_SAMPLES}")
    rng = np.random.default_rng(seed)
    theta, phi = _hemisphere_samples(rng, mc_samples)
    power = angular_power(theta, phi, spectrum)
    positions = _cell_positions(index_set, theta, phi)
    covered = positions >= 0
    sums = np.bincount(
        positions[covered], weights=power[covered], minlength=len(index_set)
    )
    variances = 2.0 * np.pi * sums / mc_samples  # hemisphere solid angle
    return VarianceProfile(
        index_set=index_set,
        variances=variances,
        mc_samples=mc_samples,
        seed=seed,
    )


def draw_channel(
    profile: VarianceProfile,
    cfg: UpaConfig,
    seed: int,
    dictionary: Dictionary | None = None,
) -> ChannelRealization:
    """Draw one channel: independent complex-Gaussian wavenumber coefficients.

    Coefficient ``l`` is circularly-symmetric Gaussian with the profile's
    variance (all real parts drawn first, then all imaginary parts); the
    spatial channel is the unit-column dictionary times the coefficients.
    """
    if dictionary is None:
        dictionary = wavenumber_dictionary(cfg, profile.index_set)
    rng = np.random.default_rng(seed)
    n = len(profile.index_set)
    scale = np.sqrt(profile.variances / 2.0)
    coeffs = scale * rng.standard_normal(n) + 1j * scale * rng.standard_normal(n)
    return ChannelRealization(
        spatial=dictionary.matrix @ coeffs, wavenumber_coeffs=coeffs, seed=seed
    )


def draw_clustered_sparse_channel(
    index_set: WavenumberIndexSet,
    cfg: UpaConfig,
    k: int,
    seed: int,
    dictionary: Dictionary | None = None,
) -> ChannelRealization:
    """Draw a channel with exactly ``k`` nonzero, contiguous coefficients.

    The support is grown from a random lattice index by repeatedly
    absorbing a random 4-neighbor of the current patch, so it is connected
    under unit-L1 adjacency; coefficients on the support are unit-variance
    complex Gaussian.  Deterministic given ``seed``.
    """
    if not 1 <= k <= len(index_set):
        raise ValueError(f"support size {k} outside 1..{len(index_set)}")
    if dictionary is None:
        dictionary = wavenumber_dictionary(cfg, index_set)
    rng = np.random.default_rng(seed)

    start = index_set.indices[int(rng.integers(len(index_set)))]
    patch = {tuple(start)}
    while len(patch) < k:
        frontier = sorted(
            (lx + dx, ly + dy)
            for lx, ly in patch
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            if (lx + dx, ly + dy) in index_set and (lx + dx, ly + dy) not in patch
        )
        patch.add(frontier[int(rng.integers(len(frontier)))])

    coeffs = np.zeros(len(index_set), dtype=complex)
    support = np.array(sorted(index_set.position(p) for p in patch))
    coeffs[support] = np.sqrt(0.5) * (
        rng.standard_normal(k) + 1j * rng.standard_normal(k)
    )
    return ChannelRealization(
        spatial=dictionary.matrix @ coeffs, wavenumber_coeffs=coeffs, seed=seed
    )
