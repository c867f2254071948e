"""Angular (2D-DFT) and wavenumber (Fourier-harmonic) sparsifying dictionaries.

Both dictionaries have unit-norm columns.  The angular one is the unitary
2D DFT over element indices; the wavenumber one stacks the Fourier-harmonic
steering vectors of the elliptic index set.  The module also carries the
Dirichlet-kernel machinery used to quantify how cluster power smears across
angular-domain bins when the element pitch drops below half a wavelength.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .array_geometry import UpaConfig, WavenumberIndexSet


@dataclass(frozen=True)
class Dictionary:
    """Unit-column sparsifying basis with labelled columns.

    ``column_labels`` holds one integer 2D index per column: centered DFT
    bin pairs for the angular domain, wavenumber lattice pairs for the
    wavenumber domain.  Labels are lexicographically ordered in both cases.
    """

    matrix: np.ndarray
    domain: Literal["angular", "wavenumber"]
    column_labels: tuple[tuple[int, int], ...]
    config: UpaConfig

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]

    def labels_array(self) -> np.ndarray:
        return np.asarray(self.column_labels, dtype=int).reshape(-1, 2)


def _centered_bins(n: int) -> np.ndarray:
    """Centered DFT bin labels -n//2 .. n - n//2 - 1 (ascending)."""
    return np.arange(-(n // 2), n - n // 2)


def angular_dictionary(cfg: UpaConfig) -> Dictionary:
    """Unitary 2D-DFT dictionary over the antenna grid.

    Entry for element ``(n_x, n_y)`` and bin ``(bx, by)`` is
    ``exp(j * 2*pi * (n_x * bx / N_x + n_y * by / N_y)) / sqrt(N)``.  The
    entries are periodic in the bin index, so labelling columns by centered
    bins changes nothing in the matrix; it only fixes a column order that
    matches the spatial-frequency layout used by the support graph.
    """
    bins_x = _centered_bins(cfg.n_x)
    bins_y = _centered_bins(cfg.n_y)
    fx = np.exp(2j * np.pi * np.outer(np.arange(cfg.n_x), bins_x) / cfg.n_x)
    fy = np.exp(2j * np.pi * np.outer(np.arange(cfg.n_y), bins_y) / cfg.n_y)
    matrix = np.kron(fx, fy) / np.sqrt(cfg.n_elements)
    labels = tuple((int(bx), int(by)) for bx in bins_x for by in bins_y)
    return Dictionary(matrix=matrix, domain="angular", column_labels=labels, config=cfg)


def wavenumber_dictionary(cfg: UpaConfig, index_set: WavenumberIndexSet) -> Dictionary:
    """Fourier-harmonic dictionary, one unit-norm column per lattice index."""
    idx = index_set.as_array()
    delta = cfg.spacing * cfg.wavelength
    nx = np.repeat(np.arange(cfg.n_x), cfg.n_y)  # row-major element order
    ny = np.tile(np.arange(cfg.n_y), cfg.n_x)
    phase = 2.0 * np.pi * delta * (
        np.outer(nx, idx[:, 0]) / cfg.l_x_len + np.outer(ny, idx[:, 1]) / cfg.l_y_len
    )
    matrix = np.exp(1j * phase) / np.sqrt(cfg.n_elements)
    labels = tuple((int(a), int(b)) for a, b in idx)
    return Dictionary(
        matrix=matrix, domain="wavenumber", column_labels=labels, config=cfg
    )


def dirichlet_kernel(n_points: int, gamma) -> np.ndarray | float:
    """Normalized Dirichlet kernel ``sin(n*g/2) / (n * sin(g/2))``.

    Unit peak at ``gamma = 0`` (removable singularity handled), zeros at
    ``gamma = 2*pi*k/n`` for ``k`` not a multiple of ``n``; values lie in
    ``[-1, 1]``.
    """
    if n_points < 1:
        raise ValueError("kernel order must be >= 1")
    g = np.asarray(gamma, dtype=float)
    half = 0.5 * g
    den = np.sin(half)
    singular = np.isclose(den, 0.0, atol=1e-12)
    safe = np.where(singular, 1.0, den)
    value = np.where(
        singular,
        np.cos(n_points * half) / np.cos(half),  # l'Hopital at den == 0
        np.sin(n_points * half) / (n_points * safe),
    )
    if np.ndim(gamma) == 0:
        return float(value)
    return value


def mismatch_probability(spacing: float) -> float:
    """Fraction of harmonics whose angular-domain probe misses the kernel peak.

    For pitch ``delta = spacing * lambda`` the angular bins sample the
    Dirichlet kernel off its zeros with probability ``1 - 2 * spacing``:
    zero at half-wavelength pitch, 1/2 at quarter, 3/4 at an eighth.
    """
    if not 0.0 < spacing <= 0.5:
        raise ValueError("spacing must lie in (0, 1/2] wavelengths")
    return 1.0 - 2.0 * spacing


def dimensionality_ratio(spacing: float) -> float:
    """Angular-to-wavenumber dictionary size ratio ``N / L = 1 / (pi * spacing^2)``."""
    return 1.0 / (np.pi * spacing**2)


def to_spatial(dictionary: Dictionary, coeffs: np.ndarray) -> np.ndarray:
    """Synthesize the spatial channel from dictionary coefficients."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (dictionary.n_columns,):
        raise ValueError(
            f"expected {dictionary.n_columns} coefficients, got {coeffs.shape}"
        )
    return dictionary.matrix @ coeffs


def project(dictionary: Dictionary, spatial: np.ndarray) -> np.ndarray:
    """Least-squares coefficients of a spatial channel in the dictionary."""
    spatial = np.asarray(spatial)
    if spatial.shape != (dictionary.n_rows,):
        raise ValueError(f"expected length-{dictionary.n_rows} spatial vector")
    if dictionary.domain == "angular":
        # unitary, so the pseudo-inverse is the adjoint
        return dictionary.matrix.conj().T @ spatial
    coeffs, *_ = np.linalg.lstsq(dictionary.matrix, spatial, rcond=None)
    return coeffs
