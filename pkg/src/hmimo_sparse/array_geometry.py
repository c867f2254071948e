"""Uniform planar array geometry and the wavenumber-domain index lattice.

The array is a UPA with ``n_x * n_y`` elements at pitch ``spacing`` (in
wavelengths).  Its spatial channel lives on a finite lattice of integer
spatial-frequency pairs ``(lx, ly)`` bounded by an ellipse whose semi-axes
are the apertures measured in wavelengths; each lattice point owns one
Fourier-harmonic steering vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np


@dataclass(frozen=True)
class UpaConfig:
    """Uniform planar array: element counts, pitch and wavelength.

    ``spacing`` is the element pitch in wavelengths (delta / lambda).
    Apertures run between the first and the last element,
    ``l_x_len = (n_x - 1) * spacing * wavelength`` and likewise for y.
    """

    n_x: int
    n_y: int
    spacing: float
    wavelength: float = 1.0

    def __post_init__(self) -> None:
        if self.n_x < 2 or self.n_y < 2:
            raise ValueError("UPA needs at least 2 elements per axis")
        if not 0.0 < self.spacing <= 0.5:
            raise ValueError("element spacing must lie in (0, 1/2] wavelengths")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be positive")

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y

    @property
    def l_x_len(self) -> float:
        return (self.n_x - 1) * self.spacing * self.wavelength

    @property
    def l_y_len(self) -> float:
        return (self.n_y - 1) * self.spacing * self.wavelength


class WavenumberIndex(NamedTuple):
    """2D integer spatial-frequency index of one Fourier harmonic."""

    lx: int
    ly: int


@dataclass(frozen=True)
class WavenumberIndexSet:
    """All integer pairs inside the aperture ellipse, lexicographically ordered."""

    config: UpaConfig
    indices: tuple[WavenumberIndex, ...]

    @property
    def cardinality(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[WavenumberIndex]:
        return iter(self.indices)

    def __contains__(self, idx) -> bool:
        return tuple(idx) in self._positions

    @cached_property
    def _positions(self) -> dict[tuple[int, int], int]:
        return {tuple(idx): i for i, idx in enumerate(self.indices)}

    def position(self, idx) -> int:
        """Column/vertex number of ``idx`` under the fixed ordering."""
        return self._positions[tuple(idx)]

    def as_array(self) -> np.ndarray:
        """Indices as an (L, 2) int array in set order."""
        return np.asarray(self.indices, dtype=int).reshape(len(self.indices), 2)


def build_index_set(cfg: UpaConfig) -> WavenumberIndexSet:
    """Enumerate the elliptic lattice of Fourier-harmonic indices.

    A pair ``(lx, ly)`` belongs to the set when
    ``(lambda * lx / L_x)**2 + (lambda * ly / L_y)**2 <= 1`` (boundary
    inclusive).  The result is ordered lexicographically by ``(lx, ly)``;
    ``(0, 0)`` is always present, so the set is never empty.
    """
    ax = cfg.l_x_len / cfg.wavelength
    ay = cfg.l_y_len / cfg.wavelength
    max_lx = math.floor(ax)
    max_ly = math.floor(ay)
    lx = np.arange(-max_lx, max_lx + 1)
    ly = np.arange(-max_ly, max_ly + 1)
    inside = (lx[:, None] / ax) ** 2 + (ly[None, :] / ay) ** 2 <= 1.0
    ii, jj = np.nonzero(inside)  # row-major scan == lexicographic (lx, ly)
    indices = tuple(
        WavenumberIndex(int(lx[i]), int(ly[j])) for i, j in zip(ii, jj)
    )
    return WavenumberIndexSet(config=cfg, indices=indices)


def fh_steering_vector(cfg: UpaConfig, idx: WavenumberIndex) -> np.ndarray:
    """Fourier-harmonic steering vector for one spatial-frequency pair.

    Entry for element ``(n_x, n_y)`` is
    ``exp(j * 2*pi * (lx * delta * n_x / L_x + ly * delta * n_y / L_y))``,
    flattened row-major over ``(n_x, n_y)``.  ``idx`` may lie outside the
    elliptic set; every entry has unit magnitude.
    """
    lx, ly = idx
    delta = cfg.spacing * cfg.wavelength
    phase_x = 2.0 * np.pi * lx * delta / cfg.l_x_len * np.arange(cfg.n_x)
    phase_y = 2.0 * np.pi * ly * delta / cfg.l_y_len * np.arange(cfg.n_y)
    return np.kron(np.exp(1j * phase_x), np.exp(1j * phase_y))


def antenna_flat_index(cfg: UpaConfig, n_x: int, n_y: int) -> int:
    """Row-major flat index of element ``(n_x, n_y)``."""
    if not (0 <= n_x < cfg.n_x and 0 <= n_y < cfg.n_y):
        raise IndexError(f"element ({n_x}, {n_y}) outside {cfg.n_x}x{cfg.n_y} array")
    return n_x * cfg.n_y + n_y


def antenna_grid_index(cfg: UpaConfig, flat: int) -> tuple[int, int]:
    """Inverse of :func:`antenna_flat_index`."""
    if not 0 <= flat < cfg.n_elements:
        raise IndexError(f"flat index {flat} outside array of {cfg.n_elements}")
    return divmod(flat, cfg.n_y)
