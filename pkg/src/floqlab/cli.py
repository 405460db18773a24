"""Command-line front end.

Subcommands: evolve, sweep, longtime, spectrum, lindblad, leakage, correct.
Each command writes delimited data (CSV for series, JSON for tensors), a
JSON run manifest, and a rendered PNG figure alongside the data (disable
with --no-figures). Exit codes: 0 success, 2 usage or configuration error,
3 resource-limit violation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import figures
from .configfile import ConfigError, RunSpec, load_config
from .driver import FloquetSchedule, config_hash, iter_stroboscopic_states, run_stroboscopic
from .ensemble import (
    RunManifest,
    config_payload,
    load_timeseries_csv,
    phase_diagram,
    realization_seeds,
    write_sweep_json,
    write_timeseries_csv,
)
from .hamiltonians import (
    DisorderRealization,
    FloquetConfig,
    InteractionKind,
    ResourceLimitError,
)
from .measurement import ReadoutCalibration, correct_marginals, sample_shots
from .observables import (
    TimeSeriesRecord,
    extract_lifetime,
    log_decimate_indices,
    magnetization_spectrum,
    spectral_peaks,
    spin_glass_order,
)
from .open_system import MAX_OPEN_SITES, NoiseModel, density_from_state, run_open_floquet, run_leakage
from .statevector import StateVector, from_bitstring

WORKERS_ENV = "FLOQLAB_WORKERS"
MAX_LONGTIME_HALF_PERIODS = 400_000   # 2e5 complete periods


def _default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--seed", type=int, metavar="U64", help="master RNG seed")
    parser.add_argument("--workers", type=int, metavar="N",
                        help=f"worker processes (default ${WORKERS_ENV} or 1)")
    parser.add_argument("--out", metavar="DIR", default="runs", help="output directory")
    parser.add_argument("--epsilon", type=float, metavar="F", help="flip perturbation strength")
    parser.add_argument("--interaction", choices=["xx", "ising", "off"],
                        help="interaction stage variant")
    parser.add_argument("--half-periods", type=int, metavar="N", dest="half_periods",
                        help="number of half periods to evolve")
    parser.add_argument("--realizations", type=int, metavar="N", help="disorder ensemble size")
    parser.add_argument("--shots", type=int, metavar="N", help="measurement shots per point")
    parser.add_argument("--length", type=int, metavar="L", help="chain length override")
    parser.add_argument("--initial-state", metavar="BITS", dest="initial_state",
                        help="initial product state digit string")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floqlab",
        description="Driven spin-chain laboratory: stroboscopic evolution, disorder "
                    "ensembles, spectra, spin-glass order, open-system noise, leakage, "
                    "and readout-error correction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="single-realization stroboscopic evolution")
    _add_common(p)
    p.add_argument("--sample", action="store_true",
                   help="estimate observables from finite shots with readout correction")

    p = sub.add_parser("sweep", help="disorder-averaged sweep over a perturbation grid")
    _add_common(p)
    p.add_argument("--epsilon-grid", metavar="F,F,...", dest="epsilon_grid",
                   help="comma-separated perturbation grid")

    p = sub.add_parser("longtime", help="long-time run with cached period propagators")
    _add_common(p)
    p.add_argument("--lifetime-window", type=int, default=64, dest="lifetime_window",
                   help="RMS window length in samples (default 64)")
    p.add_argument("--lifetime-threshold", type=float, default=0.1, dest="lifetime_threshold",
                   help="decay threshold relative to the initial window (default 0.1)")

    p = sub.add_parser("spectrum", help="Fourier spectrum of the magnetization series")
    _add_common(p)
    p.add_argument("--series", metavar="CSV", help="use the m_raw column of an existing series")

    p = sub.add_parser("lindblad", help="open-system evolution with relaxation and dephasing")
    _add_common(p)
    p.add_argument("--dt", type=float, metavar="NS", help="integrator step target (ns)")

    p = sub.add_parser("leakage", help="three-level chain, |2> population tracking")
    _add_common(p)

    p = sub.add_parser("correct", help="shot sampling plus readout-error correction")
    _add_common(p)

    return parser


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "chain_length": args.length,
        "epsilon": args.epsilon,
        "interaction": args.interaction,
        "half_periods": args.half_periods,
        "realizations": args.realizations,
        "shots": args.shots,
        "seed": args.seed,
        "workers": args.workers,
        "initial_state": args.initial_state,
    }


def _initial_state_string(spec: RunSpec) -> str:
    if spec.settings.initial_state is not None:
        return spec.settings.initial_state
    return "0" * spec.config.chain_length


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish_manifest(manifest: RunManifest, out: Path, t_start: float) -> Path:
    manifest.elapsed_s = round(time.time() - t_start, 3)
    manifest.created_unix = round(t_start, 3)
    path = out / f"{manifest.command}_{manifest.content_hash}_manifest.json"
    manifest.outputs.append(str(path))
    manifest.write(path)
    return path


def _half_periods(settings, default: int) -> int:
    return settings.half_periods if settings.half_periods is not None else default


def _sampled_record(config: FloquetConfig, realization: DisorderRealization,
                    psi0: StateVector, n_half: int, calibration: ReadoutCalibration,
                    n_shots: int, master_seed: int) -> TimeSeriesRecord:
    """Stroboscopic series estimated from finite corrected shots per point."""
    L = config.chain_length
    n_rec = n_half + 1
    site_z = np.empty((n_rec, L))
    corr = np.empty((n_rec, L, L))
    shot_seeds = realization_seeds(master_seed ^ 0x5F5F5F5F, n_rec)
    for k, amps in iter_stroboscopic_states(config, realization, psi0, n_half):
        batch = sample_shots(StateVector(amps, L), calibration, n_shots, shot_seeds[k])
        est = correct_marginals(batch, calibration)
        site_z[k] = est.site_z
        corr[k] = est.pair_zz
    m = site_z.mean(axis=1)
    chi = np.array([spin_glass_order(c) for c in corr])
    return TimeSeriesRecord(
        times=FloquetSchedule.from_config(config).times(n_half), site_z=site_z, m=m,
        chi_sg=chi, correlators=corr, config_hash=config_hash(config, realization.seed),
        seed=realization.seed)


def cmd_evolve(args) -> int:
    spec = load_config(args.config, _overrides(args))
    out = _out_dir(args)
    t0 = time.time()
    settings = spec.settings
    n_half = _half_periods(settings, 100)
    seed = realization_seeds(settings.seed, 1)[0]
    realization = DisorderRealization.draw(spec.config.chain_length, seed=seed)
    psi0 = from_bitstring(_initial_state_string(spec), local_dim=2)
    mode = "sampled" if getattr(args, "sample", False) else "pure"
    if mode == "sampled":
        calibration = spec.calibration or ReadoutCalibration.from_device_defaults(
            spec.config.chain_length)
        record = _sampled_record(spec.config, realization, psi0, n_half,
                                 calibration, settings.shots, settings.seed)
    else:
        record = run_stroboscopic(spec.config, realization, psi0, n_half)

    manifest = RunManifest(
        command="evolve", config=config_payload(spec.config), master_seed=settings.seed,
        realization_seeds=[seed],
        parameters={"half_periods": n_half, "mode": mode,
                    "shots": settings.shots if mode == "sampled" else None,
                    "initial_state": _initial_state_string(spec)})
    csv_path = out / f"evolve_{manifest.content_hash}.csv"
    write_timeseries_csv(csv_path, record, manifest.content_hash)
    manifest.outputs.append(str(csv_path))
    if not args.no_figures:
        fig_path = out / f"evolve_{manifest.content_hash}.png"
        figures.save_timeseries_figure(fig_path, record.times, record.staggered_m(),
                                       record.chi_sg,
                                       title=f"evolve: eps={spec.config.epsilon}, "
                                             f"{spec.config.interaction_kind.value}")
        manifest.outputs.append(str(fig_path))
    _finish_manifest(manifest, out, t0)
    print(f"wrote {csv_path}")
    return 0


def cmd_sweep(args) -> int:
    spec = load_config(args.config, _overrides(args))
    out = _out_dir(args)
    t0 = time.time()
    settings = spec.settings
    if getattr(args, "epsilon_grid", None):
        grid = tuple(float(x) for x in args.epsilon_grid.split(","))
    elif settings.epsilon_grid is not None:
        grid = settings.epsilon_grid
    else:
        grid = (0.0, 0.04, 0.10, 0.16)
    workers = settings.workers or _default_workers()
    n_half = _half_periods(settings, 100)
    try:
        diagram = phase_diagram(spec.config, grid, settings.realizations,
                                n_half, master_seed=settings.seed,
                                workers=workers, initial_state=settings.initial_state)
    except Exception:
        print(f"sweep aborted; any partial results are under {out}", file=sys.stderr)
        raise

    manifest = RunManifest(
        command="sweep", config=config_payload(spec.config), master_seed=settings.seed,
        realization_seeds=list(diagram.seeds),
        parameters={"half_periods": n_half,
                    "realizations": settings.realizations,
                    "epsilon_grid": [float(e) for e in diagram.epsilons],
                    "initial_state": _initial_state_string(spec)})
    json_path = out / f"sweep_{manifest.content_hash}.json"
    write_sweep_json(json_path, diagram, manifest.content_hash)
    manifest.outputs.append(str(json_path))
    if not args.no_figures:
        fig_path = out / f"sweep_{manifest.content_hash}.png"
        stag = diagram.m_mean * (1.0 - 2.0 * (np.arange(diagram.m_mean.shape[1]) % 2))[None, :]
        figures.save_sweep_figure(fig_path, diagram.epsilons, stag,
                                  title=f"sweep: {spec.config.interaction_kind.value}, "
                                        f"{settings.realizations} realizations")
        manifest.outputs.append(str(fig_path))
    _finish_manifest(manifest, out, t0)
    print(f"wrote {json_path}")
    return 0


def cmd_longtime(args) -> int:
    spec = load_config(args.config, _overrides(args))
    out = _out_dir(args)
    t0 = time.time()
    settings = spec.settings
    config = spec.config
    if config.chain_length > MAX_OPEN_SITES:
        raise ResourceLimitError(
            f"longtime runs are limited to {MAX_OPEN_SITES} sites, got {config.chain_length}")
    if config.interaction_kind is InteractionKind.OFF:
        raise ConfigError("longtime requires interaction xx or ising")
    n_half = min(_half_periods(settings, MAX_LONGTIME_HALF_PERIODS), MAX_LONGTIME_HALF_PERIODS)
    seed = realization_seeds(settings.seed, 1)[0]
    realization = DisorderRealization.draw(config.chain_length, seed=seed)
    psi0 = from_bitstring(_initial_state_string(spec), local_dim=2)
    record = run_stroboscopic(config, realization, psi0, n_half, store_correlators=False)

    life_m = extract_lifetime(record.m, window=args.lifetime_window,
                              threshold=args.lifetime_threshold, alternating=True)
    life_chi = extract_lifetime(record.chi_sg - 1.0, window=args.lifetime_window,
                                threshold=args.lifetime_threshold, alternating=False)
    manifest = RunManifest(
        command="longtime", config=config_payload(config), master_seed=settings.seed,
        realization_seeds=[seed],
        parameters={"half_periods": n_half, "lifetime_window": args.lifetime_window,
                    "lifetime_threshold": args.lifetime_threshold,
                    "initial_state": _initial_state_string(spec),
                    "lifetime_m_half_periods": life_m,
                    "lifetime_m_periods": life_m / 2.0,
                    "lifetime_chi_half_periods": life_chi,
                    "lifetime_chi_periods": life_chi / 2.0})
    keep = log_decimate_indices(n_half + 1)
    decimated = TimeSeriesRecord(
        times=record.times[keep], site_z=record.site_z[keep], m=record.m[keep],
        chi_sg=record.chi_sg[keep], correlators=None,
        config_hash=record.config_hash, seed=record.seed)
    csv_path = out / f"longtime_{manifest.content_hash}.csv"
    stag_full = record.staggered_m()
    with csv_path.open("w", newline="") as fh:
        fh.write(f"# manifest_hash={manifest.content_hash}\n")
        fh.write("half_period_index,time_ns,m_raw,m_staggered,chi_sg\n")
        for k in keep:
            fh.write(f"{k},{record.times[k]:.17g},{record.m[k]:.17g},"
                     f"{stag_full[k]:.17g},{record.chi_sg[k]:.17g}\n")
    manifest.outputs.append(str(csv_path))
    if not args.no_figures:
        fig_path = out / f"longtime_{manifest.content_hash}.png"
        figures.save_longtime_figure(fig_path, keep, stag_full[keep], record.chi_sg[keep],
                                     lifetime_m=life_m, lifetime_chi=life_chi,
                                     title=f"longtime: {config.interaction_kind.value}, "
                                           f"eps={config.epsilon}")
        manifest.outputs.append(str(fig_path))
    _finish_manifest(manifest, out, t0)
    print(f"wrote {csv_path}")
    print(f"lifetime (staggered M): {life_m} half periods = {life_m / 2.0:.1f} periods")
    print(f"lifetime (chi_SG - 1):  {life_chi} half periods = {life_chi / 2.0:.1f} periods")
    return 0


def cmd_spectrum(args) -> int:
    spec = load_config(args.config, _overrides(args))
    out = _out_dir(args)
    t0 = time.time()
    settings = spec.settings
    n_half = _half_periods(settings, 100)
    if args.series:
        series_path = Path(args.series)
        if not series_path.is_file():
            raise ConfigError(f"series file not found: {series_path}")
        _, cols = load_timeseries_csv(series_path)
        if "m_raw" not in cols:
            raise ConfigError(f"{series_path} has no m_raw column")
        m_series = cols["m_raw"]
        seeds = []
        source = str(series_path)
    else:
        ens_workers = settings.workers or _default_workers()
        from .ensemble import run_ensemble
        ens = run_ensemble(spec.config, [spec.config.epsilon], settings.realizations,
                           n_half, master_seed=settings.seed,
                           workers=ens_workers, initial_state=settings.initial_state)
        m_series = ens.m_mean()[0]
        seeds = ens.seeds
        source = "ensemble mean"
    spectrum = magnetization_spectrum(m_series)
    peaks = spectral_peaks(spectrum)

    manifest = RunManifest(
        command="spectrum", config=config_payload(spec.config), master_seed=settings.seed,
        realization_seeds=list(seeds),
        parameters={"half_periods": n_half,
                    "realizations": settings.realizations, "source": source,
                    "n_samples": spectrum.n_samples, "n_padded": spectrum.n_padded,
                    "peaks": peaks})
    csv_path = out / f"spectrum_{manifest.content_hash}.csv"
    with csv_path.open("w", newline="") as fh:
        fh.write(f"# manifest_hash={manifest.content_hash}\n")
        fh.write("frequency_cycles_per_sample,magnitude\n")
        for f, mag in zip(spectrum.frequencies, spectrum.magnitude):
            fh.write(f"{f:.17g},{mag:.17g}\n")
    manifest.outputs.append(str(csv_path))
    if not args.no_figures:
        fig_path = out / f"spectrum_{manifest.content_hash}.png"
        figures.save_spectrum_figure(fig_path, spectrum.frequencies, spectrum.magnitude,
                                     peaks=peaks, title=f"spectrum: {source}")
        manifest.outputs.append(str(fig_path))
    _finish_manifest(manifest, out, t0)
    print(f"wrote {csv_path}")
    print(f"peaks near 0.5: {peaks}")
    return 0


def cmd_lindblad(args) -> int:
    spec = load_config(args.config, _overrides(args))
    out = _out_dir(args)
    t0 = time.time()
    settings = spec.settings
    config = spec.config
    if args.length is None and args.config is None:
        config = config.replace(chain_length=5)
    n_half = _half_periods(settings, 100)
    noise = spec.noise or NoiseModel.from_device_defaults(config.chain_length)
    seed = realization_seeds(settings.seed, 1)[0]
    realization = DisorderRealization.draw(config.chain_length, seed=seed)
    init = settings.initial_state or "0" * config.chain_length
    rho0 = density_from_state(from_bitstring(init, local_dim=2))
    record = run_open_floquet(config, realization, noise, rho0, n_half, dt=args.dt)

    manifest = RunManifest(
        command="lindblad", config=config_payload(config), master_seed=settings.seed,
        realization_seeds=[seed],
        parameters={"half_periods": n_half, "initial_state": init,
                    "t1_us": list(noise.t1_us), "t2star_us": list(noise.t2star_us),
                    "dt": args.dt})
    csv_path = out / f"lindblad_{manifest.content_hash}.csv"
    write_timeseries_csv(csv_path, record, manifest.content_hash)
    manifest.outputs.append(str(csv_path))
    if not args.no_figures:
        fig_path = out / f"lindblad_{manifest.content_hash}.png"
        figures.save_timeseries_figure(fig_path, record.times, record.staggered_m(),
                                       record.chi_sg,
                                       title=f"lindblad: {config.chain_length} sites")
        manifest.outputs.append(str(fig_path))
    _finish_manifest(manifest, out, t0)
    print(f"wrote {csv_path}")
    return 0


def cmd_leakage(args) -> int:
    spec = load_config(args.config, _overrides(args))
    out = _out_dir(args)
    t0 = time.time()
    settings = spec.settings
    config = spec.config
    if args.length is None and args.config is None:
        config = config.replace(chain_length=5)
    n_half = _half_periods(settings, 100)
    realization = DisorderRealization.draw(config.chain_length, seed=settings.seed)
    init = settings.initial_state or "1" * config.chain_length
    record, pop2 = run_leakage(config, n_half, realization=realization,
                               initial_state=init, noise=spec.noise)

    manifest = RunManifest(
        command="leakage", config=config_payload(config), master_seed=settings.seed,
        realization_seeds=[settings.seed],
        parameters={"half_periods": n_half, "initial_state": init,
                    "noisy": spec.noise is not None,
                    "final_pop2": float(pop2[-1])})
    csv_path = out / f"leakage_{manifest.content_hash}.csv"
    stag = record.staggered_m()
    with csv_path.open("w", newline="") as fh:
        fh.write(f"# manifest_hash={manifest.content_hash}\n")
        fh.write("half_period_index,time_ns,m_raw,m_staggered,chi_sg,pop2"
                 + "".join(f",z{i + 1}" for i in range(config.chain_length)) + "\n")
        for k in range(len(record.m)):
            row = [str(k), f"{record.times[k]:.17g}", f"{record.m[k]:.17g}",
                   f"{stag[k]:.17g}", f"{record.chi_sg[k]:.17g}", f"{pop2[k]:.17g}"]
            row += [f"{z:.17g}" for z in record.site_z[k]]
            fh.write(",".join(row) + "\n")
    manifest.outputs.append(str(csv_path))
    if not args.no_figures:
        fig_path = out / f"leakage_{manifest.content_hash}.png"
        figures.save_leakage_figure(fig_path, pop2, stag,
                                    title=f"leakage: {config.chain_length} qutrits")
        manifest.outputs.append(str(fig_path))
    _finish_manifest(manifest, out, t0)
    print(f"wrote {csv_path}")
    print(f"final |2> population: {pop2[-1]:.4f}")
    return 0


def cmd_correct(args) -> int:
    spec = load_config(args.config, _overrides(args))
    out = _out_dir(args)
    t0 = time.time()
    settings = spec.settings
    config = spec.config
    calibration = spec.calibration or ReadoutCalibration.from_device_defaults(config.chain_length)
    seed = realization_seeds(settings.seed, 1)[0]
    realization = DisorderRealization.draw(config.chain_length, seed=seed)
    psi0 = from_bitstring(_initial_state_string(spec), local_dim=2)
    n_half = _half_periods(settings, 0)
    if n_half >= 1:
        psi = None
        for _, amps in iter_stroboscopic_states(config, realization, psi0, n_half):
            psi = amps
        state = StateVector(psi, config.chain_length)
    else:
        state = psi0
    from .statevector import site_z_expectations
    z_exact = site_z_expectations(state)
    batch = sample_shots(state, calibration, settings.shots, seed=settings.seed)
    est = correct_marginals(batch, calibration)

    manifest = RunManifest(
        command="correct", config=config_payload(config), master_seed=settings.seed,
        realization_seeds=[seed],
        parameters={"shots": settings.shots,
                    "half_periods": n_half,
                    "f00": list(calibration.f00), "f11": list(calibration.f11),
                    "initial_state": _initial_state_string(spec)})
    csv_path = out / f"correct_{manifest.content_hash}.csv"
    with csv_path.open("w", newline="") as fh:
        fh.write(f"# manifest_hash={manifest.content_hash}\n")
        fh.write("site,z_exact,z_observed,z_corrected,z_corrected_unclipped\n")
        for i in range(config.chain_length):
            fh.write(f"{i + 1},{z_exact[i]:.17g},{est.site_z_raw[i]:.17g},"
                     f"{est.site_z[i]:.17g},{est.site_z_unclipped[i]:.17g}\n")
    manifest.outputs.append(str(csv_path))
    if not args.no_figures:
        fig_path = out / f"correct_{manifest.content_hash}.png"
        figures.save_correction_figure(fig_path, z_exact, est.site_z_raw, est.site_z,
                                       title=f"readout correction, {settings.shots} shots")
        manifest.outputs.append(str(fig_path))
    _finish_manifest(manifest, out, t0)
    print(f"wrote {csv_path}")
    return 0


_COMMANDS = {
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "longtime": cmd_longtime,
    "spectrum": cmd_spectrum,
    "lindblad": cmd_lindblad,
    "leakage": cmd_leakage,
    "correct": cmd_correct,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
