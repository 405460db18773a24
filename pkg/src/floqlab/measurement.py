"""Finite-shot sampling with per-qubit readout assignment error and its
calibration-matrix correction.

Readout is modelled per qubit by the column-stochastic confusion matrix

    M_i = [[f00, 1 - f11],
           [1 - f00, f11]]

(probability of reading r given true state t is M[r, t]). Correction applies
the exact inverse to single-site marginals and the two-qubit tensor-product
inverse to pairwise marginals; corrected values are clipped to [-1, 1] with
the unclipped numbers retained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import digit_table
from .statevector import StateVector

# Per-site readout identification fidelities of the simulated device.
DEVICE_F00 = (0.936, 0.970, 0.924, 0.939, 0.902, 0.965, 0.937, 0.955, 0.925, 0.957)
DEVICE_F11 = (0.860, 0.869, 0.834, 0.853, 0.783, 0.902, 0.834, 0.861, 0.821, 0.877)


def _tiled(table: tuple[float, ...], n: int) -> tuple[float, ...]:
    reps = -(-n // len(table))
    return (table * reps)[:n]


@dataclass(frozen=True)
class ReadoutCalibration:
    """Per-site probabilities of correctly identifying |0> (f00) and |1> (f11)."""

    f00: tuple[float, ...]
    f11: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "f00", tuple(float(x) for x in self.f00))
        object.__setattr__(self, "f11", tuple(float(x) for x in self.f11))
        if len(self.f00) != len(self.f11):
            raise ValueError("f00 and f11 must have the same length")
        for name, vals in (("f00", self.f00), ("f11", self.f11)):
            if any(not 0.5 < v <= 1.0 for v in vals):
                raise ValueError(f"{name} entries must lie in (0.5, 1], got {vals}")

    def __len__(self) -> int:
        return len(self.f00)

    def confusion_matrix(self, site: int) -> np.ndarray:
        f0, f1 = self.f00[site], self.f11[site]
        return np.array([[f0, 1.0 - f1], [1.0 - f0, f1]])

    def inverse_confusion_matrix(self, site: int) -> np.ndarray:
        f0, f1 = self.f00[site], self.f11[site]
        det = f0 + f1 - 1.0   # > 0 since both exceed 0.5
        return np.array([[f1, f1 - 1.0], [f0 - 1.0, f0]]) / det

    @classmethod
    def from_device_defaults(cls, n_sites: int) -> "ReadoutCalibration":
        return cls(_tiled(DEVICE_F00, n_sites), _tiled(DEVICE_F11, n_sites))

    @classmethod
    def perfect(cls, n_sites: int) -> "ReadoutCalibration":
        return cls((1.0,) * n_sites, (1.0,) * n_sites)


@dataclass
class ShotBatch:
    """Counts of observed bitstrings from repeated dispersive readout."""

    counts: np.ndarray          # length 2^L, observed-bitstring histogram
    n_sites: int
    seed: int | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (2**self.n_sites,):
            raise ValueError("counts must have one entry per bitstring")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def n_shots(self) -> int:
        return int(self.counts.sum())


def sample_shots(psi: StateVector, calibration: ReadoutCalibration,
                 n_shots: int, seed: int) -> ShotBatch:
    """Draw bitstrings from |amplitude|^2, then flip each bit with its
    per-site assignment error probability."""
    if psi.local_dim != 2:
        raise ValueError("shot sampling is defined for qubit chains")
    L = psi.n_sites
    if len(calibration) != L:
        raise ValueError("calibration length does not match the chain")
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    probs = psi.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    states = rng.choice(probs.size, size=n_shots, p=probs)
    bits = digit_table(L, 2)[states].astype(np.int8)        # (n_shots, L)
    err0 = 1.0 - np.array(calibration.f00)
    err1 = 1.0 - np.array(calibration.f11)
    p_flip = np.where(bits == 0, err0[None, :], err1[None, :])
    bits = bits ^ (rng.random(bits.shape) < p_flip)
    weights = 1 << np.arange(L - 1, -1, -1)
    observed = bits @ weights
    counts = np.bincount(observed, minlength=2**L)
    return ShotBatch(counts=counts, n_sites=L, seed=seed)


@dataclass
class CorrectedMarginals:
    """Readout-corrected z observables; unclipped values kept for reference."""

    site_z: np.ndarray              # clipped to [-1, 1]
    pair_zz: np.ndarray             # L x L, diagonal 1, clipped
    site_z_unclipped: np.ndarray
    pair_zz_unclipped: np.ndarray
    site_z_raw: np.ndarray          # uncorrected empirical values
    pair_zz_raw: np.ndarray


def invert_site_marginal(p_read: np.ndarray, calibration: ReadoutCalibration,
                         site: int) -> np.ndarray:
    """Apply the inverse confusion matrix to an observed [P(0), P(1)] pair."""
    return calibration.inverse_confusion_matrix(site) @ np.asarray(p_read, dtype=float)


def invert_pair_marginal(p_read: np.ndarray, calibration: ReadoutCalibration,
                         site_i: int, site_j: int) -> np.ndarray:
    """Apply the two-qubit inverse confusion matrix to an observed joint
    distribution over (b_i, b_j) in the order 00, 01, 10, 11."""
    inv = np.kron(calibration.inverse_confusion_matrix(site_i),
                  calibration.inverse_confusion_matrix(site_j))
    return inv @ np.asarray(p_read, dtype=float)


def correct_marginals(batch: ShotBatch, calibration: ReadoutCalibration) -> CorrectedMarginals:
    """Readout-corrected per-site <sigma^z_i> and pairwise <sigma^z_i sigma^z_j>."""
    L = batch.n_sites
    if len(calibration) != L:
        raise ValueError("calibration length does not match the batch")
    p_obs = batch.counts / batch.n_shots
    bits = digit_table(L, 2)

    site_z_raw = np.empty(L)
    site_z_unclipped = np.empty(L)
    for i in range(L):
        p1 = float(p_obs @ bits[:, i])
        corrected = invert_site_marginal((1.0 - p1, p1), calibration, i)
        site_z_raw[i] = 1.0 - 2.0 * p1
        site_z_unclipped[i] = corrected[0] - corrected[1]

    pair_zz_raw = np.eye(L)
    pair_zz_unclipped = np.eye(L)
    sign4 = np.array([1.0, -1.0, -1.0, 1.0])
    for i in range(L):
        for j in range(i + 1, L):
            joint = np.bincount(2 * bits[:, i] + bits[:, j], weights=p_obs, minlength=4)
            corrected = invert_pair_marginal(joint, calibration, i, j)
            pair_zz_raw[i, j] = pair_zz_raw[j, i] = float(sign4 @ joint)
            pair_zz_unclipped[i, j] = pair_zz_unclipped[j, i] = float(sign4 @ corrected)

    return CorrectedMarginals(
        site_z=np.clip(site_z_unclipped, -1.0, 1.0),
        pair_zz=np.clip(pair_zz_unclipped, -1.0, 1.0),
        site_z_unclipped=site_z_unclipped,
        pair_zz_unclipped=pair_zz_unclipped,
        site_z_raw=site_z_raw,
        pair_zz_raw=pair_zz_raw)
