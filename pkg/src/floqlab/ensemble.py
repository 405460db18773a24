"""Seeded disorder ensembles, parallel sweeps, and analysis-ready output files.

Work items are (epsilon, realization) pairs executed on a bounded worker
pool; results are collected and reduced in a fixed order so that a given
(config, master seed) produces bit-identical observable files regardless of
worker count. Realization seeds derive from the master seed by counter and
are reused across epsilon values for comparability.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import __version__
from .driver import FloquetSchedule, run_stroboscopic
from .hamiltonians import DisorderRealization, FloquetConfig
from .observables import TimeSeriesRecord


def realization_seeds(master_seed: int, n_realizations: int) -> list[int]:
    """Derive per-realization RNG seeds from the master seed by counter."""
    ss = np.random.SeedSequence(master_seed)
    return [int(s) for s in ss.generate_state(n_realizations, dtype=np.uint64)]


def config_payload(config: FloquetConfig) -> dict:
    return {
        "chain_length": config.chain_length,
        "epsilon": config.epsilon,
        "t1_flip": config.t1_flip,
        "t2_disorder": config.t2_disorder,
        "t3_int": config.t3_int,
        "j1": list(config.j1),
        "j2": list(config.j2),
        "interaction_kind": config.interaction_kind.value,
        "qutrit_anharmonicity": config.qutrit_anharmonicity,
    }


@dataclass
class RunManifest:
    """Provenance of one CLI run: inputs, seeds, hash, timing, outputs.

    The content hash covers everything except timing metadata and output
    paths, so reruns of identical inputs are recognisable.
    """

    command: str
    config: dict
    master_seed: int
    realization_seeds: list[int]
    parameters: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    elapsed_s: float | None = None
    created_unix: float | None = None
    version: str = __version__

    @property
    def content_hash(self) -> str:
        payload = {
            "command": self.command,
            "config": self.config,
            "master_seed": self.master_seed,
            "realization_seeds": self.realization_seeds,
            "parameters": self.parameters,
            "version": self.version,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_json(self) -> str:
        data = {
            "command": self.command,
            "config": self.config,
            "master_seed": self.master_seed,
            "realization_seeds": self.realization_seeds,
            "parameters": self.parameters,
            "content_hash": self.content_hash,
            "outputs": self.outputs,
            "elapsed_s": self.elapsed_s,
            "created_unix": self.created_unix,
            "version": self.version,
        }
        return json.dumps(data, indent=2, sort_keys=True)

    def write(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _run_work_item(args) -> tuple[int, np.ndarray, np.ndarray]:
    """One (epsilon, realization) evolution; module-level for pickling."""
    index, config_kwargs, seed, psi_string, n_half = args
    from .statevector import from_bitstring

    config = FloquetConfig(**config_kwargs)
    realization = DisorderRealization.draw(config.chain_length, seed=seed)
    record = run_stroboscopic(config, realization, from_bitstring(psi_string),
                              n_half, store_correlators=False)
    return index, record.m, record.chi_sg


@dataclass
class EnsembleResult:
    """Per-(epsilon, realization) magnetization and spin-glass series."""

    epsilons: np.ndarray          # (nE,)
    seeds: list[int]              # (nR,)
    times: np.ndarray             # (n+1,)
    m: np.ndarray                 # (nE, nR, n+1)
    chi_sg: np.ndarray            # (nE, nR, n+1)

    def m_mean(self) -> np.ndarray:
        return self.m.mean(axis=1)

    def m_std(self) -> np.ndarray:
        return self.m.std(axis=1, ddof=1) if self.m.shape[1] > 1 else np.zeros_like(self.m_mean())

    def chi_mean(self) -> np.ndarray:
        return self.chi_sg.mean(axis=1)

    def chi_std(self) -> np.ndarray:
        if self.chi_sg.shape[1] > 1:
            return self.chi_sg.std(axis=1, ddof=1)
        return np.zeros_like(self.chi_mean())


def run_ensemble(config: FloquetConfig, epsilon_grid, n_realizations: int,
                 n_half_periods: int, master_seed: int = 0, workers: int = 1,
                 initial_state: str | None = None) -> EnsembleResult:
    """Run the (epsilon x realization) grid and collect series in fixed order."""
    epsilons = np.array(sorted(float(e) for e in epsilon_grid))
    if epsilons.size == 0:
        raise ValueError("epsilon grid must be non-empty")
    seeds = realization_seeds(master_seed, n_realizations)
    psi_string = initial_state if initial_state is not None else "0" * config.chain_length
    base_kwargs = config_payload(config)

    items = []
    for ie, eps in enumerate(epsilons):
        kwargs = dict(base_kwargs, epsilon=float(eps))
        kwargs["j1"] = tuple(kwargs["j1"])
        kwargs["j2"] = tuple(kwargs["j2"])
        for ir, seed in enumerate(seeds):
            items.append((ie * n_realizations + ir, kwargs, seed, psi_string, n_half_periods))

    if workers <= 1 or len(items) == 1:
        results = [_run_work_item(it) for it in items]
    else:
        ctx = get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            results = pool.map(_run_work_item, items, chunksize=1)
    results.sort(key=lambda r: r[0])

    n_rec = n_half_periods + 1
    m = np.empty((epsilons.size, n_realizations, n_rec))
    chi = np.empty_like(m)
    for index, m_series, chi_series in results:
        ie, ir = divmod(index, n_realizations)
        m[ie, ir] = m_series
        chi[ie, ir] = chi_series
    times = FloquetSchedule.from_config(config).times(n_half_periods)
    return EnsembleResult(epsilons=epsilons, seeds=seeds, times=times, m=m, chi_sg=chi)


@dataclass
class PhaseDiagram:
    """Disorder-averaged magnetization tensor over (epsilon, half period)."""

    epsilons: np.ndarray
    times: np.ndarray
    m_mean: np.ndarray            # (nE, n+1)
    m_std: np.ndarray
    chi_mean: np.ndarray
    chi_std: np.ndarray
    n_realizations: int
    seeds: list[int]


def phase_diagram(config: FloquetConfig, epsilon_grid, n_realizations: int = 20,
                  n_half_periods: int = 100, master_seed: int = 0, workers: int = 1,
                  initial_state: str | None = None) -> PhaseDiagram:
    """Ensemble-averaged magnetization (and spin-glass order) per epsilon."""
    ens = run_ensemble(config, epsilon_grid, n_realizations, n_half_periods,
                       master_seed=master_seed, workers=workers, initial_state=initial_state)
    return PhaseDiagram(
        epsilons=ens.epsilons, times=ens.times,
        m_mean=ens.m_mean(), m_std=ens.m_std(),
        chi_mean=ens.chi_mean(), chi_std=ens.chi_std(),
        n_realizations=n_realizations, seeds=ens.seeds)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_timeseries_csv(path: Path | str, record: TimeSeriesRecord, manifest_hash: str) -> None:
    """Half-period series as CSV; first line carries the manifest hash."""
    path = Path(path)
    L = record.n_sites
    stag = record.staggered_m()
    with path.open("w", newline="") as fh:
        fh.write(f"# manifest_hash={manifest_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(["half_period_index", "time_ns", "m_raw", "m_staggered", "chi_sg"]
                        + [f"z{i + 1}" for i in range(L)])
        for k in range(len(record.m)):
            writer.writerow([k, _fmt(record.times[k]), _fmt(record.m[k]), _fmt(stag[k]),
                             _fmt(record.chi_sg[k])] + [_fmt(z) for z in record.site_z[k]])


def read_csv_manifest_hash(path: Path | str) -> str:
    with Path(path).open() as fh:
        first = fh.readline().strip()
    if not first.startswith("# manifest_hash="):
        raise ValueError(f"{path} carries no manifest hash")
    return first.split("=", 1)[1]


def load_timeseries_csv(path: Path | str) -> tuple[str, dict[str, np.ndarray]]:
    """Load a series CSV, returning its manifest hash and named columns."""
    path = Path(path)
    mhash = read_csv_manifest_hash(path)
    with path.open() as fh:
        fh.readline()
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows)
    return mhash, {name: data[:, k] for k, name in enumerate(header)}


def load_many_timeseries(paths) -> list[dict[str, np.ndarray]]:
    """Load several series CSVs, refusing mixed-provenance aggregation."""
    hashes, out = set(), []
    for p in paths:
        mhash, cols = load_timeseries_csv(p)
        hashes.add(mhash)
        out.append(cols)
    if len(hashes) > 1:
        raise ValueError(f"refusing to aggregate series with mixed manifest hashes: {sorted(hashes)}")
    return out


def write_sweep_json(path: Path | str, diagram: PhaseDiagram, manifest_hash: str) -> None:
    """Phase-diagram tensor with ensemble mean/std and per-cell counts."""
    stagger = (1.0 - 2.0 * (np.arange(diagram.m_mean.shape[1]) % 2))[None, :]
    payload = {
        "manifest_hash": manifest_hash,
        "epsilons": [float(e) for e in diagram.epsilons],
        "times_ns": [float(t) for t in diagram.times],
        "n_realizations": diagram.n_realizations,
        "realization_count": [[diagram.n_realizations] * diagram.m_mean.shape[1]
                              for _ in diagram.epsilons],
        "m_mean": diagram.m_mean.tolist(),
        "m_std": diagram.m_std.tolist(),
        "m_staggered_mean": (diagram.m_mean * stagger).tolist(),
        "chi_mean": diagram.chi_mean.tolist(),
        "chi_std": diagram.chi_std.tolist(),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n")

