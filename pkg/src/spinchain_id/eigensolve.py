"""Symmetric tridiagonal eigensolver (implicit-shift QL).

This follows the classic EISPACK ``tql2`` iteration.  Eigenvector tracking
is optional and can be limited to the first row, which is all the forward
simulation needs: the return amplitude depends only on ``<1|E_j>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import TridiagonalOperator
from .errors import ConvergenceError

MAX_SWEEPS = 60
# Relative gap below which two energies count as degenerate.
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class EigenData:
    """Eigenvalues with the first component of every eigenvector.

    Attributes
    ----------
    energies : ndarray
        Ascending eigenvalues.
    first_components : ndarray
        ``<1|E_j>``, all positive by convention.
    vectors : ndarray or None
        Full eigenvectors as columns, with the same sign convention.
    """

    energies: np.ndarray
    first_components: np.ndarray
    vectors: Optional[np.ndarray] = None

    @property
    def weights(self) -> np.ndarray:
        return self.first_components**2

    @property
    def size(self) -> int:
        return self.energies.size


def _tql2(diagonal, off_diagonal, z, row):
    """Implicit QL; rotations go to the columns of ``z`` (2-D array) or ``row`` (list)."""
    n = len(diagonal)
    d = [float(x) for x in diagonal]
    e = [float(x) for x in off_diagonal] + [0.0]
    eps = 2.0**-52
    f = 0.0
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1 and abs(e[m]) > eps * tst1:
            m += 1
        if m > l:
            sweeps = 0
            while True:
                sweeps += 1
                if sweeps > MAX_SWEEPS:
                    raise ConvergenceError(l, MAX_SWEEPS)
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.copysign(math.hypot(p, 1.0), p)
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h

                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    if z is not None:
                        zi = z[:, i].copy()
                        zh = z[:, i + 1]
                        z[:, i] = c * zi - s * zh
                        z[:, i + 1] = s * zi + c * zh
                    else:
                        zi = row[i]
                        zh = row[i + 1]
                        row[i] = c * zi - s * zh
                        row[i + 1] = s * zi + c * zh
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] += f
        e[l] = 0.0
    return np.array(d)


def twisted_first_components(diagonal, off_diagonal, energies) -> np.ndarray:
    """First eigenvector components from a twisted factorization at each energy.

    For every energy the forward and backward pivots of ``T - E`` are
    formed, the twist index with the smallest pivot is chosen, and the
    vector is propagated outward from it as products of ratios.  Each
    component therefore carries a small *relative* error, which matters for
    localized states whose first component can be far below machine
    epsilon.  Vectorized over energies.
    """
    d = np.asarray(diagonal, dtype=float)
    e = np.asarray(off_diagonal, dtype=float)
    lam = np.asarray(energies, dtype=float)
    n = d.size
    tiny = np.finfo(float).tiny ** 0.5
    e2 = e * e

    fwd = np.empty((n, lam.size))
    fwd[0] = d[0] - lam
    for i in range(1, n):
        prev = np.where(fwd[i - 1] == 0.0, tiny, fwd[i - 1])
        fwd[i] = d[i] - lam - e2[i - 1] / prev
    bwd = np.empty((n, lam.size))
    bwd[-1] = d[-1] - lam
    for i in range(n - 2, -1, -1):
        nxt = np.where(bwd[i + 1] == 0.0, tiny, bwd[i + 1])
        bwd[i] = d[i] - lam - e2[i] / nxt
    gamma = fwd + bwd - (d[:, None] - lam)
    twist = np.argmin(np.abs(gamma), axis=0)

    # Work with log-magnitudes and signs so long decaying tails cannot underflow.
    ratios_up = np.empty((max(n - 1, 0), lam.size))
    for i in range(n - 1):
        piv = np.where(fwd[i] == 0.0, tiny, fwd[i])
        ratios_up[i] = -e[i] / piv  # v_i = ratio * v_{i+1} for i < twist
    ratios_dn = np.empty((max(n - 1, 0), lam.size))
    for i in range(1, n):
        piv = np.where(bwd[i] == 0.0, tiny, bwd[i])
        ratios_dn[i - 1] = -e[i - 1] / piv  # v_i = ratio * v_{i-1} for i > twist

    logv = np.zeros((n, lam.size))
    sign = np.ones((n, lam.size))
    for i in range(n - 2, -1, -1):
        up = i < twist
        r = ratios_up[i]
        logv[i] = np.where(up, logv[i + 1] + np.log(np.abs(r)), logv[i])
        sign[i] = np.where(up, sign[i + 1] * np.sign(r), sign[i])
    for i in range(1, n):
        dn = i > twist
        r = ratios_dn[i - 1]
        logv[i] = np.where(dn, logv[i - 1] + np.log(np.abs(r)), logv[i])
        sign[i] = np.where(dn, sign[i - 1] * np.sign(r), sign[i])
    peak = logv.max(axis=0)
    norm = np.sqrt(np.sum(np.exp(2.0 * (logv - peak)), axis=0))
    return np.exp(logv[0] - peak) / norm


def eigendecompose(op: TridiagonalOperator, want_vectors: bool = False) -> EigenData:
    """Diagonalize a symmetric tridiagonal operator.

    Parameters
    ----------
    op : TridiagonalOperator
    want_vectors : bool
        Return all eigenvectors, not just their first components.

    Returns
    -------
    EigenData
        Energies ascending; eigenvectors signed so that ``<1|E_j> > 0``.
        ``first_components`` come from :func:`twisted_first_components`
        (componentwise accurate); they agree with ``vectors[0]`` to rounding
        in absolute terms.

    Raises
    ------
    ConvergenceError
        If the QL sweep limit is hit; carries the eigenvalue index.
    """
    n = op.size
    if n == 1:
        vec = np.ones((1, 1))
        return EigenData(op.diagonal.copy(), np.ones(1), vec if want_vectors else None)
    if want_vectors:
        z = np.eye(n)
        energies = _tql2(op.diagonal, op.off_diagonal, z, None)
    else:
        row = [1.0] + [0.0] * (n - 1)
        energies = _tql2(op.diagonal, op.off_diagonal, None, row)
        z = np.array([row])

    order = np.argsort(energies, kind="stable")
    energies = energies[order]
    z = z[:, order]
    signs = np.where(z[0] < 0.0, -1.0, 1.0)
    z *= signs
    first = twisted_first_components(op.diagonal, op.off_diagonal, energies)
    return EigenData(energies, first, z if want_vectors else None)


def residuals(op: TridiagonalOperator, eig: EigenData) -> np.ndarray:
    """Per-pair residual norms ``|H v_j - E_j v_j|``; needs full vectors."""
    if eig.vectors is None:
        raise ValueError("residuals need eigenvectors; call with want_vectors=True")
    v = eig.vectors
    hv = op.diagonal[:, None] * v
    hv[:-1] += op.off_diagonal[:, None] * v[1:]
    hv[1:] += op.off_diagonal[:, None] * v[:-1]
    return np.linalg.norm(hv - v * eig.energies, axis=0)


@dataclass(frozen=True)
class GapReport:
    min_gap: float
    max_abs_energy: float
    degenerate: bool


def gap_report(eig: EigenData) -> GapReport:
    """Smallest adjacent level spacing and the largest |E_j|.

    ``degenerate`` is set when the smallest spacing falls below
    ``DEGENERACY_RTOL`` times the spectral radius, i.e. when the
    non-degeneracy premise of the reconstruction fails numerically.
    """
    if eig.size < 2:
        raise ValueError("gap report needs at least two levels")
    gaps = np.diff(eig.energies)
    min_gap = float(gaps.min())
    max_abs = float(np.max(np.abs(eig.energies)))
    scale = max(max_abs, float(eig.energies[-1] - eig.energies[0]))
    return GapReport(min_gap, max_abs, min_gap <= DEGENERACY_RTOL * scale)
