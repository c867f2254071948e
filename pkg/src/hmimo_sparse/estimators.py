"""Sparse channel estimators: graph-cut support estimation and an OMP baseline.

GCSE alternates two exact sub-steps: a minimum-cut update of the binary
support labeling under the lattice prior, then a least-squares refit on the
positive labels trimmed to the sparsity budget.  The support step needs
per-vertex evidence even where the current iterate is zero, so the previous
coefficients are augmented with the matched-filter correlation of the
residual; without that the labeling would freeze at its initialization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dictionaries import Dictionary, to_spatial
from .graphcut_emrf import (
    LABEL_NEGATIVE,
    LABEL_POSITIVE,
    EmrfGraph,
    VertexEvidence,
    min_cut_support,
)

logger = logging.getLogger(__name__)

VarianceMode = Literal["oracle_profile", "empirical"]


@dataclass(frozen=True)
class GcseConfig:
    """Iteration budget, convergence tolerance, sparsity and prior knobs."""

    max_iters: int = 10
    residual_tol: float = 1e-9
    sparsity: int = 8
    eta: float = 0.5
    variance_mode: VarianceMode = "empirical"

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("need at least one iteration")
        if self.sparsity < 1:
            raise ValueError("sparsity budget must be >= 1")
        if self.residual_tol < 0.0:
            raise ValueError("residual tolerance must be nonnegative")
        if self.eta < 0.0:
            raise ValueError("coupling must be nonnegative")


@dataclass
class EstimationResult:
    """Sparse coefficients, their support, and the per-iteration residuals.

    ``residual_trace[j]`` is the residual norm after ``j`` coefficient
    updates (entry 0 is the norm of the observation itself).
    ``spatial_estimate`` is filled when the estimator was handed the
    synthesis dictionary, else None.
    """

    coeffs: np.ndarray
    support: np.ndarray
    residual_trace: list[float] = field(repr=False)
    iterations: int = 0
    spatial_estimate: np.ndarray | None = None


def trim(vector: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest-magnitude entries, zero the rest.

    Ties break toward the lower flat index; k larger than the vector
    length returns the vector unchanged.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    vector = np.asarray(vector)
    if k >= vector.size:
        return vector.copy()
    order = np.lexsort((np.arange(vector.size), -np.abs(vector)))
    out = np.zeros_like(vector)
    keep = order[:k]
    out[keep] = vector[keep]
    return out


def ls_on_support(
    sensing: np.ndarray, y: np.ndarray, support: np.ndarray, k: int
) -> np.ndarray:
    """Least-squares refit on the positively labeled columns, then trim.

    Solves min-norm least squares restricted to columns with label +1,
    scatters the solution back to full length and keeps the k largest
    entries.  An empty selection returns the zero vector.
    """
    support = np.asarray(support)
    selected = support == LABEL_POSITIVE
    coeffs = np.zeros(sensing.shape[1], dtype=complex)
    if not np.any(selected):
        return coeffs
    solution, *_ = np.linalg.lstsq(sensing[:, selected], y, rcond=None)
    coeffs[selected] = solution
    return trim(coeffs, k)


def proxy_evidence(
    sensing: np.ndarray,
    residual: np.ndarray,
    prev_coeffs: np.ndarray,
    prev_support: np.ndarray,
    variance_mode: VarianceMode = "empirical",
    prior_variances: np.ndarray | None = None,
) -> VertexEvidence:
    """Per-vertex evidence for the support update.

    Evidence is the previous coefficient plus the residual's normalized
    correlation with the corresponding sensing column (zero-norm columns
    contribute nothing).  The zero-label variance is the average residual
    power seen at the currently negative vertices, i.e. the mean squared
    matched-filter correlation over them, which puts it on the same scale
    as the evidence; the nonzero-label variance comes either from a known
    variance profile (floored at the zero-label variance) or from the
    evidence magnitude itself.
    """
    col_norm_sq = np.sum(np.abs(sensing) ** 2, axis=0)
    safe = np.where(col_norm_sq > 0.0, col_norm_sq, 1.0)
    correlation = (sensing.conj().T @ residual) / safe
    correlation[col_norm_sq == 0.0] = 0.0
    evidence = np.asarray(prev_coeffs, dtype=complex) + correlation

    negative = np.asarray(prev_support) == LABEL_NEGATIVE
    zero_point_power = np.abs(correlation[negative] if negative.any() else correlation) ** 2
    eps_sq = max(float(np.mean(zero_point_power)), np.finfo(float).tiny)

    if variance_mode == "oracle_profile":
        if prior_variances is None:
            raise ValueError("oracle_profile mode needs prior variances")
        sigma_sq = np.maximum(np.asarray(prior_variances, dtype=float), eps_sq)
    elif variance_mode == "empirical":
        sigma_sq = np.maximum(np.abs(evidence) ** 2, eps_sq * (1.0 + 1e-6))
    else:
        raise ValueError(f"unknown variance mode {variance_mode!r}")
    return VertexEvidence(evidence=evidence, sigma_sq=sigma_sq, eps_sq=eps_sq)


def gcse(
    y: np.ndarray,
    sensing: np.ndarray,
    graph: EmrfGraph,
    cfg: GcseConfig,
    prior_variances: np.ndarray | None = None,
    dictionary: Dictionary | None = None,
) -> EstimationResult:
    """Alternating min-cut support update and trimmed least-squares refit.

    Starts from the zero estimate with all labels negative and iterates
    while the iteration budget and the residual tolerance both allow it.
    A cut that selects no vertex (all evidence drowned) falls back to the
    top-k evidence vertices for that iteration.
    """
    n_cols = sensing.shape[1]
    if graph.n_vertices != n_cols:
        raise ValueError("support graph must have one vertex per sensing column")
    if cfg.sparsity > n_cols:
        raise ValueError("sparsity budget exceeds column count")

    coeffs = np.zeros(n_cols, dtype=complex)
    support = np.full(n_cols, LABEL_NEGATIVE, dtype=int)
    trace = [float(np.linalg.norm(y))]
    iterations = 0
    for _ in range(cfg.max_iters):
        residual = y - sensing @ coeffs
        if trace[-1] < cfg.residual_tol:
            break
        evidence = proxy_evidence(
            sensing,
            residual,
            coeffs,
            support,
            variance_mode=cfg.variance_mode,
            prior_variances=prior_variances,
        )
        support = min_cut_support(graph, evidence)
        if not np.any(support == LABEL_POSITIVE):
            logger.info("degenerate cut: selecting top-%d evidence vertices", cfg.sparsity)
            support = np.full(n_cols, LABEL_NEGATIVE, dtype=int)
            top = np.lexsort((np.arange(n_cols), -np.abs(evidence.evidence)))
            support[top[: cfg.sparsity]] = LABEL_POSITIVE
        coeffs = ls_on_support(sensing, y, support, cfg.sparsity)
        trace.append(float(np.linalg.norm(y - sensing @ coeffs)))
        iterations += 1

    result = EstimationResult(
        coeffs=coeffs,
        support=support,
        residual_trace=trace,
        iterations=iterations,
    )
    if dictionary is not None:
        result.spatial_estimate = to_spatial(dictionary, coeffs)
    return result


def omp(
    y: np.ndarray,
    sensing: np.ndarray,
    k: int,
    residual_tol: float = 0.0,
    dictionary: Dictionary | None = None,
) -> EstimationResult:
    """Orthogonal matching pursuit: greedy atoms, full refit each step.

    Selects the column with the largest normalized residual correlation,
    re-solves least squares on the selected set, and stops after k atoms
    or when the residual norm drops below the tolerance.
    """
    if k < 1:
        raise ValueError("need a positive atom budget")
    n_cols = sensing.shape[1]
    col_norms = np.linalg.norm(sensing, axis=0)
    selectable = col_norms > 0.0

    selected: list[int] = []
    coeffs = np.zeros(n_cols, dtype=complex)
    residual = y.copy()
    trace = [float(np.linalg.norm(residual))]
    while len(selected) < min(k, int(np.sum(selectable))):
        if trace[-1] < residual_tol:
            break
        score = np.abs(sensing.conj().T @ residual)
        score = np.where(selectable, score / np.where(selectable, col_norms, 1.0), -1.0)
        score[selected] = -1.0
        atom = int(np.argmax(score))
        selected.append(atom)
        solution, *_ = np.linalg.lstsq(sensing[:, selected], y, rcond=None)
        residual = y - sensing[:, selected] @ solution
        trace.append(float(np.linalg.norm(residual)))

    if selected:
        coeffs[selected] = solution
    support = np.full(n_cols, LABEL_NEGATIVE, dtype=int)
    support[selected] = LABEL_POSITIVE
    result = EstimationResult(
        coeffs=coeffs,
        support=support,
        residual_trace=trace,
        iterations=len(selected),
    )
    if dictionary is not None:
        result.spatial_estimate = to_spatial(dictionary, coeffs)
    return result


def nmse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Normalized mean square error ||estimate - truth||^2 / ||truth||^2."""
    truth_energy = float(np.sum(np.abs(truth) ** 2))
    if truth_energy == 0.0:
        raise ValueError("NMSE undefined for a zero reference")
    return float(np.sum(np.abs(estimate - truth) ** 2) / truth_energy)
