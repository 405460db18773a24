"""Lindblad master-equation evolution and the three-level leakage model.

The master equation

    drho/dt = -i[H, rho] + 1/2 sum_i (2 C_i rho C_i^dag - {C_i^dag C_i, rho})

is integrated with a fixed-step 4th-order Runge-Kutta scheme applied in the
interaction picture of the stage Hamiltonian: the unitary part is carried by
exact cached propagators and RK4 integrates only the (slow) rotated
dissipator. At zero noise the evolution is therefore exactly unitary, and
the step is trace-preserving to rounding.

Collapse operators are per-site energy relaxation (lowering operator, rate
1/T1) and pure dephasing (number operator, rate 1/T2* - 1/(2 T1), clipped
at zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import statevector as sv
from .driver import FloquetSchedule, config_hash
from .hamiltonians import (
    DisorderRealization,
    FloquetConfig,
    HermitianOperator,
    InteractionKind,
    ResourceLimitError,
    _embed,
    build_flip_hamiltonian,
    build_interaction_hamiltonian,
    build_qutrit_flip_hamiltonian,
    build_qutrit_hamiltonians,
    digit_table,
    disorder_kick_phases,
)
from .observables import TimeSeriesRecord, spin_glass_order

MAX_OPEN_SITES = 6      # density matrices up to 4096 x 4096

# Per-site coherence times of the simulated device, microseconds.
DEVICE_T1_US = (82.9, 26.9, 50.1, 37.3, 72.5, 68.4, 24.1, 70.6, 71.0, 36.6)
DEVICE_T2STAR_US = (0.79, 1.78, 1.08, 1.60, 0.90, 4.16, 0.69, 2.42, 0.79, 2.32)

MAX_LINDBLAD_DT = 0.5   # ns, stage-subdivision contract


def _tiled(table: tuple[float, ...], n: int) -> tuple[float, ...]:
    reps = -(-n // len(table))
    return (table * reps)[:n]


@dataclass(frozen=True)
class NoiseModel:
    """Per-site T1 / T2* (microseconds) with derived rates in 1/ns."""

    t1_us: tuple[float, ...]
    t2star_us: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "t1_us", tuple(float(x) for x in self.t1_us))
        object.__setattr__(self, "t2star_us", tuple(float(x) for x in self.t2star_us))
        if len(self.t1_us) != len(self.t2star_us):
            raise ValueError("t1_us and t2star_us must have the same length")
        if any(x <= 0 for x in self.t1_us + self.t2star_us):
            raise ValueError("coherence times must be positive")

    def __len__(self) -> int:
        return len(self.t1_us)

    @property
    def gamma_relax(self) -> np.ndarray:
        """Energy relaxation rates 1/T1, in 1/ns."""
        return 1e-3 / np.array(self.t1_us)

    @property
    def gamma_phi(self) -> np.ndarray:
        """Pure dephasing rates max(0, 1/T2* - 1/(2 T1)), in 1/ns."""
        g = 1e-3 / np.array(self.t2star_us) - 0.5e-3 / np.array(self.t1_us)
        return np.clip(g, 0.0, None)

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.gamma_relax > 0) or np.any(self.gamma_phi > 0))

    @classmethod
    def from_device_defaults(cls, n_sites: int) -> "NoiseModel":
        return cls(_tiled(DEVICE_T1_US, n_sites), _tiled(DEVICE_T2STAR_US, n_sites))

    @classmethod
    def zero(cls, n_sites: int) -> "NoiseModel":
        return cls((math.inf,) * n_sites, (math.inf,) * n_sites)


@lru_cache(maxsize=8)
def _collapse_ops(noise: NoiseModel, n_sites: int, local_dim: int):
    """Dense collapse operators and the summed C^dag C for a noise model."""
    if len(noise) != n_sites:
        raise ValueError("noise model length does not match the chain length")
    lower = np.zeros((local_dim, local_dim), dtype=complex)
    for k in range(1, local_dim):
        lower[k - 1, k] = math.sqrt(k)
    number = np.diag(np.arange(local_dim, dtype=float)).astype(complex)
    g_relax = noise.gamma_relax
    g_phi = noise.gamma_phi
    ops = []
    for i in range(n_sites):
        if g_relax[i] > 0:
            ops.append(math.sqrt(g_relax[i]) * _embed({i: lower}, n_sites, local_dim))
        if g_phi[i] > 0:
            ops.append(math.sqrt(2.0 * g_phi[i]) * _embed({i: number}, n_sites, local_dim))
    dim = local_dim**n_sites
    csum = np.zeros((dim, dim), dtype=complex)
    for c in ops:
        csum += c.conj().T @ c
    return tuple(ops), csum


def _dissipator(rho: np.ndarray, ops, csum) -> np.ndarray:
    out = -0.5 * (csum @ rho + rho @ csum)
    for c in ops:
        out += c @ rho @ c.conj().T
    return out


def _ip_rk4_step(rho: np.ndarray, u_full: np.ndarray, u_half: np.ndarray,
                 ops, csum, dt: float) -> np.ndarray:
    """One RK4 step in the interaction picture of the stage Hamiltonian."""
    if not ops:
        out = u_full @ rho @ u_full.conj().T
        return 0.5 * (out + out.conj().T)

    def rotated_dissipator(x, u):
        y = u @ x @ u.conj().T
        y = _dissipator(y, ops, csum)
        return u.conj().T @ y @ u

    k1 = _dissipator(rho, ops, csum)
    k2 = rotated_dissipator(rho + 0.5 * dt * k1, u_half)
    k3 = rotated_dissipator(rho + 0.5 * dt * k2, u_half)
    k4 = rotated_dissipator(rho + dt * k3, u_full)
    out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = u_full @ out @ u_full.conj().T
    return 0.5 * (out + out.conj().T)


def lindblad_step(rho: np.ndarray, h: HermitianOperator, noise: NoiseModel,
                  dt: float, local_dim: int = 2) -> np.ndarray:
    """Advance a density matrix by one fixed step of length dt (ns)."""
    if not 0 < dt <= MAX_LINDBLAD_DT:
        raise ValueError(f"dt must lie in (0, {MAX_LINDBLAD_DT}] ns, got {dt}")
    n_sites = len(noise)
    if local_dim**n_sites != rho.shape[0] or rho.shape[0] != h.dim:
        raise ValueError("dimension mismatch between rho, h and the noise model")
    ops, csum = _collapse_ops(noise, n_sites, local_dim)
    u_full = sv.make_propagator(h, dt).matrix
    u_half = sv.make_propagator(h, dt / 2.0).matrix
    return _ip_rk4_step(rho, u_full, u_half, ops, csum, dt)


def density_from_state(psi: sv.StateVector) -> np.ndarray:
    return np.outer(psi.amplitudes, psi.amplitudes.conj())


def check_density_matrix(rho: np.ndarray, *, herm_atol: float = 1e-9,
                         trace_atol: float = 1e-8, eig_floor: float = -1e-7) -> None:
    """Raise if rho violates the Hermiticity / trace / positivity bounds."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > herm_atol:
        raise ValueError(f"density matrix not Hermitian: {herm:.3e}")
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"density matrix trace drifted: {tr - 1.0:.3e}")
    w_min = float(np.linalg.eigvalsh(rho)[0])
    if w_min < eig_floor:
        raise ValueError(f"density matrix lost positivity: min eig {w_min:.3e}")


def _evolve_stage(rho: np.ndarray, h: HermitianOperator, ops, csum,
                  duration: float, dt_target: float) -> np.ndarray:
    if duration <= 0:
        return rho
    if not ops:
        u = sv.make_propagator(h, duration).matrix
        out = u @ rho @ u.conj().T
        return 0.5 * (out + out.conj().T)
    n_sub = max(1, math.ceil(duration / dt_target))
    dt = duration / n_sub
    u_full = sv.make_propagator(h, dt).matrix
    u_half = sv.make_propagator(h, dt / 2.0).matrix
    for _ in range(n_sub):
        rho = _ip_rk4_step(rho, u_full, u_half, ops, csum, dt)
    return rho


def _kick_density(rho: np.ndarray, phases: np.ndarray) -> np.ndarray:
    return (phases[:, None] * rho) * phases.conj()[None, :]


def default_stage_dt(stage_duration: float) -> float:
    return min(0.1, stage_duration / 10.0) if stage_duration > 0 else 0.1


def run_open_floquet(config: FloquetConfig, realization: DisorderRealization,
                     noise: NoiseModel, rho0: np.ndarray, n_half_periods: int,
                     dt: float | None = None, store_correlators: bool = True,
                     check_states: bool = True) -> TimeSeriesRecord:
    """Stage-by-stage Lindblad evolution through the Floquet protocol.

    Noise acts during the flip and interaction stages; the zero-duration
    disorder kicks are exact unitary sandwiches. Observables are recorded at
    every half period, as in the pure driver.
    """
    L = config.chain_length
    if L > MAX_OPEN_SITES:
        raise ResourceLimitError(
            f"open-system runs are limited to {MAX_OPEN_SITES} sites, got {L}")
    if n_half_periods < 1:
        raise ValueError("n_half_periods must be >= 1")
    dim = 2**L
    if rho0.shape != (dim, dim):
        raise ValueError(f"rho0 must have shape {(dim, dim)}")

    h_flip = build_flip_hamiltonian(config)
    h_int = build_interaction_hamiltonian(config)
    kick = disorder_kick_phases(realization)
    ops, csum = _collapse_ops(noise, L, 2)
    schedule = FloquetSchedule.from_config(config)
    dt_flip = dt if dt is not None else default_stage_dt(config.t1_flip)
    dt_int = dt if dt is not None else default_stage_dt(config.t3_int)

    n_rec = n_half_periods + 1
    site_z = np.empty((n_rec, L))
    m = np.empty(n_rec)
    chi = np.empty(n_rec)
    corr_store = np.empty((n_rec, L, L)) if store_correlators else None

    def record(k, rho):
        if check_states:
            check_density_matrix(rho)
        probs = np.diag(rho).real
        z = sv.probabilities_site_z(probs, L)
        corr = sv.probabilities_pair_zz(probs, L)
        site_z[k] = z
        m[k] = z.mean()
        chi[k] = spin_glass_order(corr)
        if corr_store is not None:
            corr_store[k] = corr

    rho = 0.5 * (rho0 + rho0.conj().T)
    record(0, rho)
    for k in range(1, n_rec):
        rho = _evolve_stage(rho, h_flip, ops, csum, config.t1_flip, dt_flip)
        rho = _kick_density(rho, kick)
        if k % 2 == 0 and h_int is not None:
            rho = _evolve_stage(rho, h_int, ops, csum, config.t3_int, dt_int)
        record(k, rho)

    return TimeSeriesRecord(
        times=schedule.times(n_half_periods),
        site_z=site_z, m=m, chi_sg=chi, correlators=corr_store,
        config_hash=config_hash(config, realization.seed), seed=realization.seed)


QUTRIT_ZVALS = (1.0, -1.0, -1.0)   # dichotomic readout: |2> counted as |1>


def run_leakage(config: FloquetConfig, n_half_periods: int,
                realization: DisorderRealization | None = None,
                initial_state: str | None = None,
                noise: NoiseModel | None = None,
                dt: float | None = None) -> tuple[TimeSeriesRecord, np.ndarray]:
    """Three-level chain under the Floquet protocol; returns (record, pop2 series).

    The flip drives the {|0>, |1>} subspace while the anharmonicity runs on
    |2> throughout; the interaction stage is the bosonic hop, whose
    |11> <-> |02> channel is the leakage source. Observables are dichotomic
    (|2> counted as |1>); pop2 is the total |2> population summed over sites.
    Pure-state by default; pass a NoiseModel for master-equation evolution.
    The default initial state is the fully excited computational state, the
    configuration most exposed to the exchange channel.
    """
    L = config.chain_length
    if n_half_periods < 1:
        raise ValueError("n_half_periods must be >= 1")
    if realization is None:
        realization = DisorderRealization.draw(L, seed=0)
    if initial_state is None:
        initial_state = "1" * L
    h_anharm, h_hop = build_qutrit_hamiltonians(config)
    h_flip = HermitianOperator(build_qutrit_flip_hamiltonian(config).matrix + h_anharm.matrix)
    h_int = HermitianOperator(h_hop.matrix + h_anharm.matrix)
    kick = disorder_kick_phases(realization, local_dim=3)
    schedule = FloquetSchedule.from_config(config)
    interaction_on = config.interaction_kind is not InteractionKind.OFF

    psi0 = sv.from_bitstring(initial_state, local_dim=3)
    n2_per_state = (digit_table(L, 3) == 2).sum(axis=1)

    n_rec = n_half_periods + 1
    site_z = np.empty((n_rec, L))
    m = np.empty(n_rec)
    chi = np.empty(n_rec)
    corr_store = np.empty((n_rec, L, L))
    pop2 = np.empty(n_rec)

    def record(k, probs):
        z = sv.probabilities_site_z(probs, L, 3, QUTRIT_ZVALS)
        corr = sv.probabilities_pair_zz(probs, L, 3, QUTRIT_ZVALS)
        site_z[k] = z
        m[k] = z.mean()
        chi[k] = spin_glass_order(corr)
        corr_store[k] = corr
        pop2[k] = float(probs @ n2_per_state)

    if noise is None or noise.is_zero:
        u_flip = sv.make_propagator(h_flip, config.t1_flip).matrix
        u_int = sv.make_propagator(h_int, config.t3_int).matrix if interaction_on else None
        psi = psi0.amplitudes.copy()
        record(0, np.abs(psi) ** 2)
        for k in range(1, n_rec):
            psi = kick * (u_flip @ psi)
            if k % 2 == 0 and u_int is not None:
                psi = u_int @ psi
            record(k, np.abs(psi) ** 2)
    else:
        ops, csum = _collapse_ops(noise, L, 3)
        dt_flip = dt if dt is not None else default_stage_dt(config.t1_flip)
        dt_int = dt if dt is not None else default_stage_dt(config.t3_int)
        rho = density_from_state(psi0)
        record(0, np.diag(rho).real)
        for k in range(1, n_rec):
            rho = _evolve_stage(rho, h_flip, ops, csum, config.t1_flip, dt_flip)
            rho = _kick_density(rho, kick)
            if k % 2 == 0 and interaction_on:
                rho = _evolve_stage(rho, h_int, ops, csum, config.t3_int, dt_int)
            record(k, np.diag(rho).real)

    record_out = TimeSeriesRecord(
        times=schedule.times(n_half_periods),
        site_z=site_z, m=m, chi_sg=chi, correlators=corr_store,
        config_hash=config_hash(config, realization.seed), seed=realization.seed)
    return record_out, pop2
