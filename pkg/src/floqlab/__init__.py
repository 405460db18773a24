"""floqlab: exact numerical laboratory for a periodically driven spin chain.

Library layout:

- :mod:`floqlab.hamiltonians` - dense operator builders and protocol config
- :mod:`floqlab.statevector`  - pure-state propagators and z-basis observables
- :mod:`floqlab.driver`       - Floquet assembly, stroboscopic runs, Magnus terms
- :mod:`floqlab.observables`  - spectra, spin-glass order, lifetime extraction
- :mod:`floqlab.open_system`  - Lindblad evolution and three-level leakage
- :mod:`floqlab.measurement`  - finite-shot sampling and readout correction
- :mod:`floqlab.ensemble`     - seeded disorder ensembles and parallel sweeps
- :mod:`floqlab.cli`          - command-line front end
"""

from .hamiltonians import (
    DisorderRealization,
    FloquetConfig,
    HermitianOperator,
    InteractionKind,
)
from .statevector import Propagator, StateVector, apply, from_bitstring, make_propagator
from .driver import (
    FloquetSchedule,
    MagnusReport,
    build_period_unitary,
    magnus_analysis,
    run_stroboscopic,
    verify_flip_elimination,
)
from .observables import (
    Spectrum,
    TimeSeriesRecord,
    extract_lifetime,
    magnetization_spectrum,
    spin_glass_order,
    staggered,
)

__version__ = "0.1.0"

__all__ = [
    "DisorderRealization",
    "FloquetConfig",
    "FloquetSchedule",
    "HermitianOperator",
    "InteractionKind",
    "MagnusReport",
    "Propagator",
    "Spectrum",
    "StateVector",
    "TimeSeriesRecord",
    "apply",
    "build_period_unitary",
    "extract_lifetime",
    "from_bitstring",
    "magnetization_spectrum",
    "magnus_analysis",
    "make_propagator",
    "run_stroboscopic",
    "spin_glass_order",
    "staggered",
    "verify_flip_elimination",
]
