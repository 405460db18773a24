"""Dense operator builders for the driven-chain protocol.

Every builder returns a :class:`HermitianOperator`, a dense complex matrix
with a cached eigendecomposition. Units are ns for time and rad/ns for
angular frequency; frequencies quoted in MHz enter as ``2*pi*1e-3`` rad/ns.

Basis conventions: site 1 is the most significant digit of the basis index,
``sigma^z |0> = +|0>``, and local level ``|2>`` (qutrits) is the second
excited transmon level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache, reduce

import numpy as np

TWO_PI = 2.0 * math.pi

# Protocol defaults: couplings and stage durations of the simulated device.
J1_DEFAULT = TWO_PI * 10.84e-3   # nearest-neighbour XX coupling, rad/ns
J2_DEFAULT = TWO_PI * 0.28e-3    # next-nearest-neighbour coupling, rad/ns
ETA_DEFAULT = -TWO_PI * 250.0e-3  # transmon anharmonicity, rad/ns
T1_FLIP_DEFAULT = 40.0           # flip stage duration, ns
T2_DISORDER_DEFAULT = 0.0        # virtual-Z disorder takes zero time
T3_INT_DEFAULT = 10.0            # interaction stage duration, ns

MAX_SITES = 12          # 2^12 dense pure-state ceiling
MAX_QUTRIT_SITES = 5    # 3^5 dense ceiling

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


class ResourceLimitError(ValueError):
    """A requested system size exceeds the dense desk-scale ceiling."""


class InteractionKind(str, Enum):
    XX = "xx"
    ISING = "ising"
    OFF = "off"


def mhz_to_rad_per_ns(f_mhz: float) -> float:
    """Convert a frequency in MHz to angular frequency in rad/ns."""
    return TWO_PI * f_mhz * 1e-3


class HermitianOperator:
    """Dense Hermitian matrix with a lazily cached eigendecomposition.

    The matrix is made read-only on construction; instances are safe to
    share across parallel workers.
    """

    __slots__ = ("matrix", "_eig")

    def __init__(self, matrix: np.ndarray, *, atol: float = 1e-12):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        dev = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
        if dev > atol:
            raise ValueError(f"matrix is not Hermitian: max |A - A^dag| = {dev:.3e}")
        mat.setflags(write=False)
        self.matrix = mat
        self._eig = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (eigenvalues, eigenvectors), computed once and cached."""
        if self._eig is None:
            w, v = np.linalg.eigh(self.matrix)
            w.setflags(write=False)
            v.setflags(write=False)
            self._eig = (w, v)
        return self._eig

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


@dataclass(frozen=True)
class FloquetConfig:
    """All protocol parameters for one driven-chain experiment.

    ``j1`` and ``j2`` are per-bond coupling strengths in rad/ns with
    ``L-1`` and ``L-2`` entries; ``None`` selects uniform device defaults.
    """

    chain_length: int
    epsilon: float = 0.0
    t1_flip: float = T1_FLIP_DEFAULT
    t2_disorder: float = T2_DISORDER_DEFAULT
    t3_int: float = T3_INT_DEFAULT
    j1: tuple[float, ...] = field(default=None)
    j2: tuple[float, ...] = field(default=None)
    interaction_kind: InteractionKind = InteractionKind.XX
    qutrit_anharmonicity: float = ETA_DEFAULT

    def __post_init__(self):
        L = self.chain_length
        if not isinstance(L, int) or L < 1:
            raise ValueError(f"chain_length must be a positive integer, got {L!r}")
        if L > MAX_SITES:
            raise ResourceLimitError(
                f"chains are limited to {MAX_SITES} sites for dense storage, got {L}")
        if not math.isfinite(self.epsilon) or abs(self.epsilon) > 1.0:
            raise ValueError(f"epsilon must be finite with |epsilon| <= 1, got {self.epsilon!r}")
        if self.t1_flip <= 0:
            raise ValueError("t1_flip must be positive")
        if self.t2_disorder < 0 or self.t3_int < 0:
            raise ValueError("stage durations must be non-negative")
        object.__setattr__(self, "interaction_kind", InteractionKind(self.interaction_kind))
        j1 = self.j1 if self.j1 is not None else (J1_DEFAULT,) * max(L - 1, 0)
        j2 = self.j2 if self.j2 is not None else (J2_DEFAULT,) * max(L - 2, 0)
        j1 = tuple(float(j) for j in j1)
        j2 = tuple(float(j) for j in j2)
        if len(j1) != max(L - 1, 0):
            raise ValueError(f"j1 must have {L - 1} entries, got {len(j1)}")
        if len(j2) != max(L - 2, 0):
            raise ValueError(f"j2 must have {L - 2} entries, got {len(j2)}")
        object.__setattr__(self, "j1", j1)
        object.__setattr__(self, "j2", j2)

    @property
    def rabi_rate(self) -> float:
        """Drive rate g chosen so g * t1_flip = pi (a perfect flip at epsilon=0)."""
        return math.pi / self.t1_flip

    @property
    def rabi_angle(self) -> float:
        """Rotation angle per flip stage, pi * (1 + epsilon)."""
        return math.pi * (1.0 + self.epsilon)

    @property
    def period(self) -> float:
        """Floquet period in ns; the interaction stage is omitted when off."""
        t3 = self.t3_int if self.interaction_kind is not InteractionKind.OFF else 0.0
        return 2.0 * (self.t1_flip + self.t2_disorder) + t3

    def replace(self, **changes) -> "FloquetConfig":
        from dataclasses import replace as _replace
        if changes.get("chain_length", self.chain_length) != self.chain_length:
            changes.setdefault("j1", None)   # re-derive per-bond defaults for the new length
            changes.setdefault("j2", None)
        return _replace(self, **changes)


@dataclass(frozen=True)
class DisorderRealization:
    """Per-site disorder phases phi_i = h_i * t2 in [-pi, pi], plus RNG provenance."""

    phases: tuple[float, ...]
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        if any(not math.isfinite(p) or abs(p) > math.pi for p in self.phases):
            raise ValueError("disorder phases must lie in [-pi, pi]")

    def __len__(self) -> int:
        return len(self.phases)

    @property
    def as_array(self) -> np.ndarray:
        return np.array(self.phases)

    @classmethod
    def draw(cls, n_sites: int, seed: int) -> "DisorderRealization":
        """Draw phases uniformly from [-pi, pi); same seed, same phases, bit-exact."""
        rng = np.random.default_rng(seed)
        return cls(phases=tuple(rng.uniform(-math.pi, math.pi, n_sites)), seed=seed)

    @classmethod
    def zero(cls, n_sites: int) -> "DisorderRealization":
        return cls(phases=(0.0,) * n_sites)


def _kron_chain(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def _embed(local_ops: dict[int, np.ndarray], n_sites: int, local_dim: int = 2) -> np.ndarray:
    """Kronecker-embed site-local operators; site 0 is the most significant digit."""
    eye = np.eye(local_dim, dtype=complex)
    return _kron_chain([local_ops.get(i, eye) for i in range(n_sites)])


@lru_cache(maxsize=32)
def digit_table(n_sites: int, local_dim: int = 2) -> np.ndarray:
    """(d^L, L) table of local digits per basis state, most significant first."""
    dim = local_dim**n_sites
    idx = np.arange(dim)
    table = np.empty((dim, n_sites), dtype=np.int64)
    for i in range(n_sites):
        table[:, i] = (idx // local_dim ** (n_sites - 1 - i)) % local_dim
    table.setflags(write=False)
    return table


def build_flip_hamiltonian(config: FloquetConfig) -> HermitianOperator:
    """Global imperfect-flip generator g(1+eps) * sum_i sigma^x_i / 2."""
    L = config.chain_length
    amp = config.rabi_rate * (1.0 + config.epsilon) / 2.0
    h = np.zeros((2**L, 2**L), dtype=complex)
    for i in range(L):
        h += amp * _embed({i: SIGMA_X}, L)
    return HermitianOperator(h)


def build_disorder_hamiltonian(realization: DisorderRealization,
                               local_dim: int = 2) -> HermitianOperator:
    """Diagonal disorder kick generator sum_i phi_i * (1 - 2 n_i) / 2.

    For qubits this is sum_i phi_i sigma^z_i / 2. The generator carries the
    phases directly (the product h_i * t2 is the only physical parameter);
    the stage evolution is exp(-i G) independent of the nominal duration.
    Levels above |1> acquire phases scaling with excitation number.
    """
    L = len(realization)
    digits = digit_table(L, local_dim)
    zlike = 1.0 - 2.0 * digits
    diag = 0.5 * (zlike @ realization.as_array)
    return HermitianOperator(np.diag(diag.astype(complex)))


def disorder_kick_phases(realization: DisorderRealization, local_dim: int = 2) -> np.ndarray:
    """Unit-modulus diagonal of the disorder kick unitary exp(-i G)."""
    g = build_disorder_hamiltonian(realization, local_dim)
    return np.exp(-1j * np.diag(g.matrix).real)


def build_xx_interaction(config: FloquetConfig) -> HermitianOperator:
    """Hopping interaction sum_l sum_i J^(l)_i (XX + YY)/2 over l = 1, 2 bonds.

    Commutes with total sigma^z: matrix elements vanish between basis states
    of different excitation number.
    """
    L = config.chain_length
    dim = 2**L
    h = np.zeros((dim, dim), dtype=complex)
    for ell, couplings in ((1, config.j1), (2, config.j2)):
        for i, j_val in enumerate(couplings):
            if j_val == 0.0:
                continue
            xx = _embed({i: SIGMA_X, i + ell: SIGMA_X}, L)
            yy = _embed({i: SIGMA_Y, i + ell: SIGMA_Y}, L)
            h += 0.5 * j_val * (xx + yy)
    return HermitianOperator(h)


def build_ising_interaction(config: FloquetConfig) -> HermitianOperator:
    """Diagonal Ising interaction sum_l sum_i J^(l)_i sigma^z_i sigma^z_{i+l} / 2.

    Same coupling magnitudes as the XX variant, z axis, no field terms.
    """
    L = config.chain_length
    z = 1.0 - 2.0 * digit_table(L, 2)
    diag = np.zeros(2**L)
    for ell, couplings in ((1, config.j1), (2, config.j2)):
        for i, j_val in enumerate(couplings):
            diag += 0.5 * j_val * z[:, i] * z[:, i + ell]
    return HermitianOperator(np.diag(diag.astype(complex)))


def build_interaction_hamiltonian(config: FloquetConfig) -> HermitianOperator | None:
    """Interaction operator selected by ``config.interaction_kind`` (None when off)."""
    kind = config.interaction_kind
    if kind is InteractionKind.XX:
        return build_xx_interaction(config)
    if kind is InteractionKind.ISING:
        return build_ising_interaction(config)
    return None


def _lowering_qutrit() -> np.ndarray:
    # three-level truncation of the bosonic annihilation operator
    a = np.zeros((3, 3), dtype=complex)
    a[0, 1] = 1.0
    a[1, 2] = math.sqrt(2.0)
    return a


def build_qutrit_hamiltonians(config: FloquetConfig) -> tuple[HermitianOperator, HermitianOperator]:
    """(H_anharm, H_hop) for the three-level chain.

    H_anharm = eta * sum_i |2><2|_i puts the second excited level at the
    anharmonicity; H_hop = sum_i J^(1)_i (a_i a^dag_{i+1} + h.c.) with bosonic
    matrix elements, so the |11> <-> |02> channel carries the sqrt(2)
    enhancement. Restricted to levels {0, 1} the hop term equals the XX
    interaction with J2 = 0.
    """
    L = config.chain_length
    if L > MAX_QUTRIT_SITES:
        raise ResourceLimitError(
            f"qutrit chains are limited to {MAX_QUTRIT_SITES} sites, got {L}")
    dim = 3**L
    proj2 = np.zeros((3, 3), dtype=complex)
    proj2[2, 2] = 1.0
    h_anharm = np.zeros((dim, dim), dtype=complex)
    for i in range(L):
        h_anharm += config.qutrit_anharmonicity * _embed({i: proj2}, L, 3)
    a = _lowering_qutrit()
    adag = a.conj().T
    h_hop = np.zeros((dim, dim), dtype=complex)
    for i, j_val in enumerate(config.j1):
        term = j_val * _embed({i: a, i + 1: adag}, L, 3)
        h_hop += term + term.conj().T
    return HermitianOperator(h_anharm), HermitianOperator(h_hop)


def build_qutrit_flip_hamiltonian(config: FloquetConfig) -> HermitianOperator:
    """Imperfect-flip generator acting inside the {|0>, |1>} subspace of each qutrit."""
    L = config.chain_length
    if L > MAX_QUTRIT_SITES:
        raise ResourceLimitError(
            f"qutrit chains are limited to {MAX_QUTRIT_SITES} sites, got {L}")
    sx01 = np.zeros((3, 3), dtype=complex)
    sx01[0, 1] = sx01[1, 0] = 1.0
    amp = config.rabi_rate * (1.0 + config.epsilon) / 2.0
    h = np.zeros((3**L, 3**L), dtype=complex)
    for i in range(L):
        h += amp * _embed({i: sx01}, L, 3)
    return HermitianOperator(h)
