"""Spin-chain model and its single-excitation sector.

The chain Hamiltonian is

    H = sum_n delta_n (s+_n s-_{n+1} + s-_n s+_{n+1} + Delta Z_n Z_{n+1})

on N spins with N - 1 bonds.  Sites are numbered 1..N in docstrings and
0..N-1 in arrays: ``couplings[k]`` is the bond between sites k+1 and k+2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ChainError

# <0|H|0> = VACUUM_ENERGY_COEFF * Delta * G; checked against the full
# Hilbert-space matrix by oracle.derive_constants.
VACUUM_ENERGY_COEFF = 1


def _frozen(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Ground-truth chain: couplings, anisotropy and the two known signs.

    Parameters
    ----------
    couplings : array_like
        The N - 1 bond strengths.  All must be finite and nonzero.
    anisotropy : float
        Relative strength of the ZZ term.
    sign_hints : tuple of int
        Signs (+1 or -1) of the first two couplings.  For a two-site chain
        the second hint is ignored.
    """

    couplings: np.ndarray
    anisotropy: float = 0.0
    sign_hints: tuple[int, int] = (1, 1)

    def __post_init__(self):
        couplings = _frozen(np.atleast_1d(self.couplings))
        if couplings.ndim != 1 or couplings.size < 1:
            raise ChainError("a chain needs at least one coupling")
        if not np.all(np.isfinite(couplings)):
            raise ChainError("couplings must be finite")
        zero = np.flatnonzero(couplings == 0.0)
        if zero.size:
            raise ChainError(
                f"zero coupling at bond(s) {(zero + 1).tolist()} disconnects the chain"
            )
        if not math.isfinite(self.anisotropy):
            raise ChainError("anisotropy must be finite")
        hints = tuple(int(h) for h in self.sign_hints)
        if len(hints) != 2 or any(h not in (-1, 1) for h in hints):
            raise ChainError(f"sign_hints must be two entries of +1/-1, got {self.sign_hints}")
        for k in range(min(2, couplings.size)):
            if np.sign(couplings[k]) != hints[k]:
                raise ChainError(
                    f"sign hint {hints[k]:+d} contradicts coupling {k + 1} = {couplings[k]}"
                )
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "anisotropy", float(self.anisotropy))
        object.__setattr__(self, "sign_hints", hints)

    @property
    def n_sites(self) -> int:
        return self.couplings.size + 1

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "couplings": [float(c) for c in self.couplings],
            "anisotropy": self.anisotropy,
            "sign_hints": list(self.sign_hints),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChainSpec":
        spec = cls(data["couplings"], data.get("anisotropy", 0.0), tuple(data["sign_hints"]))
        if "n_sites" in data and int(data["n_sites"]) != spec.n_sites:
            raise ChainError(
                f"n_sites={data['n_sites']} but {len(spec.couplings)} couplings given"
            )
        return spec

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ChainSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Real symmetric tridiagonal matrix stored as its two diagonals.

    ``shift`` records a uniform offset already added to ``diagonal``
    (zero for the physical single-excitation block).
    """

    diagonal: np.ndarray
    off_diagonal: np.ndarray
    shift: float = 0.0

    def __post_init__(self):
        d = _frozen(self.diagonal)
        e = _frozen(self.off_diagonal)
        if d.ndim != 1 or e.ndim != 1 or e.size != d.size - 1:
            raise ChainError(
                f"diagonal of length {d.size} needs {d.size - 1} off-diagonal entries, "
                f"got {e.size}"
            )
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "off_diagonal", e)
        object.__setattr__(self, "shift", float(self.shift))

    @property
    def size(self) -> int:
        return self.diagonal.size

    def shifted(self, c: float) -> "TridiagonalOperator":
        """Return the operator with ``c`` added to every diagonal entry."""
        return TridiagonalOperator(self.diagonal + c, self.off_diagonal, self.shift + c)

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diagonal)
            + np.diag(self.off_diagonal, 1)
            + np.diag(self.off_diagonal, -1)
        )

    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius."""
        e = np.abs(self.off_diagonal)
        radius = np.zeros(self.size)
        radius[:-1] += e
        radius[1:] += e
        return float(np.max(np.abs(self.diagonal) + radius))


def build_chain(couplings, anisotropy=0.0, sign_hints=None) -> ChainSpec:
    """Validate raw parameters into a :class:`ChainSpec`.

    When ``sign_hints`` is omitted the signs of the first two couplings are
    used, which is what a simulation with known ground truth wants.
    """
    couplings = np.atleast_1d(np.asarray(couplings, dtype=float))
    if sign_hints is None:
        signs = [-1 if c < 0 else 1 for c in couplings[:2]]
        sign_hints = tuple(signs + [1] * (2 - len(signs)))
    return ChainSpec(couplings, anisotropy, tuple(sign_hints))


def random_chain(n_sites, interval=(0.95, 1.05), anisotropy=0.0, sign_policy="positive", rng=None):
    """Draw couplings uniformly from ``interval``.

    ``sign_policy`` is ``"positive"`` (all couplings positive) or
    ``"random"`` (independent random sign per bond).
    """
    if n_sites < 2:
        raise ChainError("n_sites must be at least 2")
    lo, hi = interval
    if not 0 <= lo < hi:
        raise ChainError(f"coupling interval must satisfy 0 <= lo < hi, got {interval}")
    rng = np.random.default_rng(rng)
    mags = rng.uniform(lo, hi, size=n_sites - 1)
    if sign_policy == "positive":
        signs = np.ones(n_sites - 1)
    elif sign_policy == "random":
        signs = rng.choice([-1.0, 1.0], size=n_sites - 1)
    else:
        raise ChainError(f"unknown sign policy {sign_policy!r}")
    return build_chain(mags * signs, anisotropy)


def total_coupling(spec: ChainSpec) -> float:
    """Sum of all couplings (the constant G)."""
    return math.fsum(spec.couplings)


def vacuum_energy(spec: ChainSpec) -> float:
    """Energy of the all-|0> state."""
    return VACUUM_ENERGY_COEFF * spec.anisotropy * total_coupling(spec)


def single_excitation_hamiltonian(spec: ChainSpec) -> TridiagonalOperator:
    """Restriction of the chain Hamiltonian to one-excitation states.

    Site n carries ``D_n = Delta (G - 2 delta_n - 2 delta_{n-1})`` on the
    diagonal with ``delta_0 = delta_N = 0``; the hopping between n and n+1
    is ``delta_n``.
    """
    padded = np.concatenate(([0.0], spec.couplings, [0.0]))
    g = total_coupling(spec)
    diagonal = spec.anisotropy * (g - 2.0 * padded[1:] - 2.0 * padded[:-1])
    return TridiagonalOperator(diagonal, spec.couplings, 0.0)
