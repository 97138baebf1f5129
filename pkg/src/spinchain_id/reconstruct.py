"""Recover couplings and anisotropy from the first-spin spectral data.

The input is a list of energies (known only up to a common offset) and
the squared first components ``w_j = <1|E_j>^2``.  Rows of the eigenvector
matrix are rebuilt one site at a time:

* the diagonal element of site n is ``D_n = sum_j E_j <n|E_j>^2``;
* the three-term relation ``(E_j - D_n) <n|E_j> - delta_{n-1} <n-1|E_j>
  = delta_n <n+1|E_j>`` gives ``|delta_n|`` by normalization and the next
  row by division;
* the first two signs are supplied, the difference ``D_1 - D_2`` fixes the
  anisotropy, and from then on ``D_n = K - kappa Delta (delta_n + delta_{n-1})``
  fixes each further coupling including its sign.

Only differences ``E_j - D_n`` and the gauge constant ``K`` enter, so the
unknown offset of the energies never has to be known.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import TridiagonalOperator
from .eigensolve import eigendecompose
from .errors import NondegeneracyViolated, NormCollapse, PipelineError, SignMagnitudeConflict

log = logging.getLogger(__name__)

# D_1 - D_2 = DIAGONAL_DIFFERENCE_COEFF * Delta * delta_2, as read off the
# full Hilbert-space matrix by oracle.derive_constants.
DIAGONAL_DIFFERENCE_COEFF = 2


class SpectralInputError(PipelineError, ValueError):
    module = "reconstruct"


@dataclass(frozen=True, eq=False)
class SpectralInput:
    """Energies (up to a common offset), first-component weights and sign hints."""

    omegas: np.ndarray
    weights: np.ndarray
    n_sites: int
    sign_hints: tuple[int, int] = (1, 1)

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if omegas.shape != (self.n_sites,) or weights.shape != (self.n_sites,):
            raise SpectralInputError(
                f"expected {self.n_sites} energies and weights, got "
                f"{omegas.size} and {weights.size}"
            )
        if self.n_sites < 2:
            raise SpectralInputError("need at least two sites")
        if not (np.all(np.isfinite(omegas)) and np.all(np.isfinite(weights))):
            raise SpectralInputError("energies and weights must be finite")
        if np.any(np.diff(omegas) <= 0.0):
            raise NondegeneracyViolated(
                "energies must be strictly ascending (non-degenerate spectrum)"
            )
        if np.any(weights <= 0.0):
            raise SpectralInputError("all weights must be positive")
        hints = tuple(int(h) for h in self.sign_hints)
        if len(hints) != 2 or any(h not in (-1, 1) for h in hints):
            raise SpectralInputError(f"sign_hints must be two entries of +1/-1, got {hints}")
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "sign_hints", hints)


@dataclass(eq=False)
class ReconstructionResult:
    couplings_hat: np.ndarray
    anisotropy_hat: float
    diag_hat: np.ndarray
    column_norm_residuals: np.ndarray
    sign_magnitude_disagreements: np.ndarray
    final_residual: float
    orthogonality_error: float
    weight_sum_deviation: float
    xx_branch: bool
    spectrum_residual: float = math.nan
    rows: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        def num(x):
            x = float(x)
            return x if math.isfinite(x) else None

        return {
            "couplings_hat": [float(c) for c in self.couplings_hat],
            "anisotropy_hat": num(self.anisotropy_hat),
            "diagnostics": {
                "column_norm_residuals": [float(r) for r in self.column_norm_residuals],
                "spectrum_residual": num(self.spectrum_residual),
                "sign_magnitude_disagreements": [
                    float(r) for r in self.sign_magnitude_disagreements
                ],
                "final_residual": float(self.final_residual),
                "orthogonality_error": float(self.orthogonality_error),
                "weight_sum_deviation": float(self.weight_sum_deviation),
                "xx_branch": self.xx_branch,
                "diag_hat": [float(d) for d in self.diag_hat],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _orthogonalize(u, basis):
    # two passes of classical Gram-Schmidt; exact arithmetic makes these no-ops
    for _ in range(2):
        u = u - basis.T @ (basis @ u)
    return u


def reconstruct_couplings(
    data: SpectralInput,
    delta_zero_tol: float = 1e-6,
    consistency_tol: float | None = 1e-6,
    magnitude: str = "signed",
    collapse_tol: float = 1e-12,
) -> ReconstructionResult:
    """Rebuild the chain couplings and anisotropy from spectral data.

    Parameters
    ----------
    data : SpectralInput
    delta_zero_tol : float
        If ``|D_1 - D_2| <= delta_zero_tol * |delta_2|`` the anisotropy is
        taken as zero.  The diagonal then carries no sign information, so
        couplings beyond the second are returned positive.
    consistency_tol : float or None
        Relative tolerance between the signed-solve magnitude and the
        column-norm magnitude of each coupling beyond the second; exceeding
        it raises :class:`SignMagnitudeConflict`.  ``None`` only records the
        disagreement.
    magnitude : {"signed", "norm"}
        Which route supplies ``|delta_n|`` for n >= 3.  The sign always comes
        from the signed solve.
    collapse_tol : float
        Column norms below ``collapse_tol`` times the spectral width raise
        :class:`NormCollapse`.

    Returns
    -------
    ReconstructionResult
    """
    if magnitude not in ("signed", "norm"):
        raise ValueError(f"magnitude must be 'signed' or 'norm', got {magnitude!r}")
    n = data.n_sites
    omega = data.omegas
    raw_sum = math.fsum(data.weights)
    weight_dev = raw_sum - 1.0
    if abs(weight_dev) > 1e-12:
        log.debug("renormalizing weights, raw sum deviates by %.3g", weight_dev)
    w = data.weights / raw_sum
    width = float(omega[-1] - omega[0])
    kappa = DIAGONAL_DIFFERENCE_COEFF

    rows = np.zeros((n, n))
    rows[0] = np.sqrt(w)
    diag = np.zeros(n)
    couplings = np.zeros(n - 1)
    col_res = np.zeros(n - 1)
    disagreements = np.zeros(max(n - 3, 0))
    anisotropy = math.nan if n == 2 else 0.0
    xx = n == 2
    gauge = 0.0

    for k in range(n - 1):
        v = rows[k]
        diag[k] = float(np.dot(omega, v * v))
        u = (omega - diag[k]) * v
        if k > 0:
            u -= couplings[k - 1] * rows[k - 1]
        u = _orthogonalize(u, rows[: k + 1])
        norm = float(np.linalg.norm(u))
        if norm <= collapse_tol * width:
            raise NormCollapse(k + 1, norm)

        if k < 2:
            delta = data.sign_hints[k] * norm
        elif xx:
            delta = norm
        else:
            signed = (gauge - diag[k]) / (kappa * anisotropy) - couplings[k - 1]
            gap = abs(abs(signed) - norm)
            disagreements[k - 2] = gap
            col_res[k] = (norm / abs(signed)) ** 2 - 1.0 if signed != 0.0 else math.inf
            if consistency_tol is not None and gap > consistency_tol * max(norm, abs(signed)):
                raise SignMagnitudeConflict(k + 1, signed, norm)
            sign = 1.0 if signed >= 0.0 else -1.0
            delta = signed if magnitude == "signed" else sign * norm
        couplings[k] = delta
        rows[k + 1] = u / (math.copysign(norm, delta))

        if k == 1:
            diff = diag[0] - diag[1]
            if abs(diff) <= delta_zero_tol * abs(couplings[1]):
                xx = True
                anisotropy = 0.0
            else:
                anisotropy = diff / (kappa * couplings[1])
                gauge = diag[0] + kappa * anisotropy * couplings[0]

    v = rows[n - 1]
    diag[n - 1] = float(np.dot(omega, v * v))
    tail = (omega - diag[n - 1]) * v - couplings[n - 2] * rows[n - 2]
    final_residual = float(np.linalg.norm(tail))
    ortho = float(np.abs(rows @ rows.T - np.eye(n)).max())

    return ReconstructionResult(
        couplings_hat=couplings,
        anisotropy_hat=anisotropy,
        diag_hat=diag,
        column_norm_residuals=col_res,
        sign_magnitude_disagreements=disagreements,
        final_residual=final_residual,
        orthogonality_error=ortho,
        weight_sum_deviation=weight_dev,
        xx_branch=xx,
        rows=rows,
    )


def rebuild_operator(result: ReconstructionResult) -> TridiagonalOperator:
    """Single-excitation operator implied by the estimated parameters."""
    from .chain import build_chain, single_excitation_hamiltonian

    aniso = result.anisotropy_hat if math.isfinite(result.anisotropy_hat) else 0.0
    return single_excitation_hamiltonian(build_chain(result.couplings_hat, aniso))


def verify_reconstruction(result: ReconstructionResult, data: SpectralInput) -> float:
    """Re-diagonalize the estimate and compare with the input spectrum.

    Energies are compared after removing their means (the input offset is
    unknown); weights are compared directly.  Returns the largest absolute
    deviation and stores it on ``result.spectrum_residual``.
    """
    eig = eigendecompose(rebuild_operator(result))
    e_fit = eig.energies - eig.energies.mean()
    e_in = data.omegas - data.omegas.mean()
    w_in = data.weights / data.weights.sum()
    residual = float(max(np.abs(e_fit - e_in).max(), np.abs(eig.weights - w_in).max()))
    result.spectrum_residual = residual
    return residual
