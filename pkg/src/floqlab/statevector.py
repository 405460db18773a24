"""Exact pure-state evolution: propagators, state application, z-basis observables.

Propagators are built from the Hermitian eigendecomposition of their
generator (exactly unitary up to rounding, reusable across durations).
Expectation values are computed from probability marginals, never by
materialising sigma^z_i as a full matrix.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .hamiltonians import HermitianOperator, digit_table


class StateVector:
    """Complex amplitudes over the d^L computational basis, site 1 most significant."""

    __slots__ = ("amplitudes", "n_sites", "local_dim")

    def __init__(self, amplitudes: np.ndarray, n_sites: int, local_dim: int = 2):
        amps = np.array(amplitudes, dtype=complex)
        if amps.shape != (local_dim**n_sites,):
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {local_dim**n_sites}")
        amps.setflags(write=False)
        self.amplitudes = amps
        self.n_sites = n_sites
        self.local_dim = local_dim

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self) -> str:
        return f"StateVector(n_sites={self.n_sites}, local_dim={self.local_dim})"


def from_bitstring(s: str, local_dim: int | None = None) -> StateVector:
    """Computational basis state from a digit string, leftmost character = site 1.

    Characters '0'/'1' ('2' allowed for qutrits). ``local_dim`` is inferred
    from the digits when not given.
    """
    if not s:
        raise ValueError("empty state string")
    digits = []
    for ch in s:
        if ch not in "012":
            raise ValueError(f"invalid character {ch!r} in state string {s!r}")
        digits.append(int(ch))
    d = local_dim if local_dim is not None else (3 if 2 in digits else 2)
    if max(digits) >= d:
        raise ValueError(f"digit {max(digits)} out of range for local dimension {d}")
    L = len(digits)
    index = 0
    for dig in digits:
        index = index * d + dig
    amps = np.zeros(d**L, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, L, d)


class Propagator:
    """Dense unitary U = exp(-i H t); apply with matrix-vector products."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        mat = np.asarray(matrix, dtype=complex)
        mat.setflags(write=False)
        self.matrix = mat

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "Propagator") -> "Propagator":
        return Propagator(self.matrix @ other.matrix)


def make_propagator(h: HermitianOperator, duration: float) -> Propagator:
    """U = exp(-i * h * duration) via the (cached) eigendecomposition of h."""
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator(h)
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if duration == 0.0:
        return Propagator(np.eye(h.dim, dtype=complex))
    w, v = h.eigensystem()
    return Propagator((v * np.exp(-1j * w * duration)) @ v.conj().T)


def apply(p: Propagator, psi: StateVector) -> StateVector:
    """Return U |psi>; the input state is unmodified."""
    if p.dim != psi.dim:
        raise ValueError(f"dimension mismatch: propagator {p.dim}, state {psi.dim}")
    return StateVector(p.matrix @ psi.amplitudes, psi.n_sites, psi.local_dim)


@lru_cache(maxsize=32)
def _zvalue_table(n_sites: int, local_dim: int, zvals: tuple[float, ...]) -> np.ndarray:
    """(d^L, L) table of per-site z eigenvalues for every basis state."""
    lookup = np.array(zvals)
    table = lookup[digit_table(n_sites, local_dim)]
    table.setflags(write=False)
    return table


def default_zvals(local_dim: int) -> tuple[float, ...]:
    """Dichotomic sigma^z values per level; |2> counts as |1> (value -1)."""
    if local_dim == 2:
        return (1.0, -1.0)
    if local_dim == 3:
        return (1.0, -1.0, -1.0)
    raise ValueError(f"unsupported local dimension {local_dim}")


def site_z_expectations(psi: StateVector, zvals: tuple[float, ...] | None = None) -> np.ndarray:
    """<sigma^z_i> per site, from probability marginals."""
    zv = zvals if zvals is not None else default_zvals(psi.local_dim)
    table = _zvalue_table(psi.n_sites, psi.local_dim, tuple(zv))
    return psi.probabilities() @ table


def pair_zz_expectations(psi: StateVector, zvals: tuple[float, ...] | None = None) -> np.ndarray:
    """Symmetric L x L matrix of <sigma^z_i sigma^z_j>, diagonal 1."""
    zv = zvals if zvals is not None else default_zvals(psi.local_dim)
    table = _zvalue_table(psi.n_sites, psi.local_dim, tuple(zv))
    weighted = table * psi.probabilities()[:, None]
    return weighted.T @ table


def probabilities_site_z(probs: np.ndarray, n_sites: int, local_dim: int = 2,
                         zvals: tuple[float, ...] | None = None) -> np.ndarray:
    """Per-site <sigma^z_i> from a basis probability vector (shared with density matrices)."""
    zv = zvals if zvals is not None else default_zvals(local_dim)
    table = _zvalue_table(n_sites, local_dim, tuple(zv))
    return probs @ table


def probabilities_pair_zz(probs: np.ndarray, n_sites: int, local_dim: int = 2,
                          zvals: tuple[float, ...] | None = None) -> np.ndarray:
    """Pair correlator matrix from a basis probability vector."""
    zv = zvals if zvals is not None else default_zvals(local_dim)
    table = _zvalue_table(n_sites, local_dim, tuple(zv))
    weighted = table * probs[:, None]
    return weighted.T @ table


def excitation_numbers(n_sites: int, local_dim: int = 2) -> np.ndarray:
    """Total excitation number of each basis state (sum of local digits)."""
    return digit_table(n_sites, local_dim).sum(axis=1)
