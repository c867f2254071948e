"""Random combining front-end and noisy pilot observations.

The receiver sees the channel only through a composite combining matrix
``C = diag(A) @ P @ diag(M)``: per-feed digital phasors ``A``, a unit-modulus
random phase matrix ``P``, and real per-element amplitude weights ``M``.
Noise is added at a target SNR measured on the realized combined signal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .array_geometry import UpaConfig
from .channel_model import ChannelRealization


@dataclass(frozen=True)
class CombinerConfig:
    """Feed count and RNG seed for the combining front-end."""

    n_feeds: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_feeds < 1:
            raise ValueError("need at least one feed")


@dataclass(frozen=True)
class Observation:
    """Pilot observation with the noise level actually applied."""

    y: np.ndarray
    noise_variance: float
    snr_linear: float
    pilot_symbol: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if abs(abs(self.pilot_symbol) - 1.0) > 1e-12:
            raise ValueError("pilot symbol must have unit modulus")


def combiner_factors(cfg: UpaConfig, ccfg: CombinerConfig):
    """The three random factors (A, M, P) of the combining matrix.

    A: n_feeds unit-modulus phasors; M: n_elements amplitudes uniform on
    [0, 1]; P: n_feeds x n_elements unit-modulus phasors.  Phases are drawn
    first for A, then M, then P, all from one generator seeded by the
    combiner seed.
    """
    rng = np.random.default_rng(ccfg.seed)
    a = np.exp(2j * np.pi * rng.random(ccfg.n_feeds))
    m = rng.random(cfg.n_elements)
    p = np.exp(2j * np.pi * rng.random((ccfg.n_feeds, cfg.n_elements)))
    return a, m, p


def build_combiner(
    cfg: UpaConfig, ccfg: CombinerConfig, debug_unit_gains: bool = False
) -> np.ndarray:
    """Composite combining matrix ``diag(A) @ P @ diag(M)``.

    ``debug_unit_gains`` forces A and M to ones so that C == P; useful for
    isolating the phase matrix in tests.
    """
    a, m, p = combiner_factors(cfg, ccfg)
    if debug_unit_gains:
        a = np.ones_like(a)
        m = np.ones_like(m)
    return a[:, None] * p * m[None, :]


def observe(
    combiner: np.ndarray,
    realization: ChannelRealization,
    snr_db: float | None,
    seed: int,
) -> Observation:
    """Noisy pilot observation ``y = C @ H * x + n`` at a target SNR.

    The pilot is the constant 1.  ``snr_db = None`` (or +inf) disables
    noise.  Otherwise the per-entry noise variance is set from the realized
    combined signal, ``|| C @ H ||^2 / snr_linear``, so the drawn instance
    meets the target exactly; a zero channel makes that variance zero, which
    is surfaced as a warning.
    """
    signal = combiner @ realization.spatial
    if snr_db is None or np.isinf(snr_db):
        return Observation(y=signal, noise_variance=0.0, snr_linear=np.inf)

    snr_linear = 10.0 ** (snr_db / 10.0)
    signal_energy = float(np.sum(np.abs(signal) ** 2))
    if signal_energy == 0.0:
        warnings.warn(
            "zero channel at finite SNR: noise variance collapses to 0",
            RuntimeWarning,
            stacklevel=2,
        )
    noise_variance = signal_energy / snr_linear
    rng = np.random.default_rng(seed)
    n_feeds = combiner.shape[0]
    scale = np.sqrt(noise_variance / 2.0)
    noise = scale * (rng.standard_normal(n_feeds) + 1j * rng.standard_normal(n_feeds))
    return Observation(
        y=signal + noise, noise_variance=noise_variance, snr_linear=snr_linear
    )
