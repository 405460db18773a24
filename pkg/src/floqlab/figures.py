"""Matplotlib rendering of the report figures written next to each data file."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path: Path | str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_timeseries_figure(path, times_ns, m_staggered, chi_sg, title="") -> None:
    fig, (ax_m, ax_chi) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    index = np.arange(len(m_staggered))
    ax_m.plot(index, m_staggered, lw=1.0, color="tab:blue")
    ax_m.set_ylabel(r"staggered $\langle M \rangle$")
    ax_m.set_ylim(-1.1, 1.1)
    ax_m.axhline(0.0, color="0.7", lw=0.5)
    ax_chi.plot(index, chi_sg, lw=1.0, color="tab:purple")
    ax_chi.set_ylabel(r"$\chi_{SG}$")
    ax_chi.set_xlabel("half-period index")
    if title:
        ax_m.set_title(title)
    _finish(fig, path)


def save_sweep_figure(path, epsilons, m_staggered_mean, title="") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n_idx = m_staggered_mean.shape[1]
    im = ax.imshow(m_staggered_mean, aspect="auto", origin="lower", cmap="RdBu_r",
                   vmin=-1.0, vmax=1.0,
                   extent=[0, n_idx - 1, float(epsilons[0]), float(epsilons[-1])])
    ax.set_xlabel("half-period index")
    ax.set_ylabel(r"perturbation $\epsilon$")
    fig.colorbar(im, ax=ax, label=r"staggered $\langle M \rangle$ (ensemble mean)")
    if title:
        ax.set_title(title)
    _finish(fig, path)


def save_spectrum_figure(path, frequencies, magnitude, peaks=None, title="") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(frequencies, magnitude, lw=1.0, color="tab:green")
    if peaks:
        for f in peaks:
            ax.axvline(f, color="tab:red", lw=0.8, ls="--", alpha=0.7)
    ax.set_xlabel("frequency (cycles per half-period sample)")
    ax.set_ylabel("|FFT| magnitude")
    ax.set_xlim(0.0, 0.5)
    if title:
        ax.set_title(title)
    _finish(fig, path)


def save_longtime_figure(path, indices, m_staggered, chi_sg,
                         lifetime_m=None, lifetime_chi=None, title="") -> None:
    fig, (ax_m, ax_chi) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_m.plot(np.maximum(indices, 1), np.abs(m_staggered), lw=0.8, color="tab:blue")
    ax_m.set_xscale("log")
    ax_m.set_ylabel(r"|staggered $\langle M \rangle$|")
    if lifetime_m is not None and lifetime_m >= 1:
        ax_m.axvline(lifetime_m, color="tab:red", ls="--", lw=1.0, label="lifetime")
        ax_m.legend(frameon=False)
    ax_chi.plot(np.maximum(indices, 1), chi_sg, lw=0.8, color="tab:purple")
    ax_chi.set_xscale("log")
    ax_chi.set_ylabel(r"$\chi_{SG}$")
    ax_chi.set_xlabel("half-period index")
    if lifetime_chi is not None and lifetime_chi >= 1:
        ax_chi.axvline(lifetime_chi, color="tab:red", ls="--", lw=1.0)
    if title:
        ax_m.set_title(title)
    _finish(fig, path)


def save_leakage_figure(path, pop2, m_staggered, title="") -> None:
    fig, (ax_p, ax_m) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    index = np.arange(len(pop2))
    ax_p.plot(index, pop2, lw=1.0, color="tab:orange")
    ax_p.set_ylabel(r"total $|2\rangle$ population")
    ax_m.plot(index, m_staggered, lw=1.0, color="tab:blue")
    ax_m.set_ylabel(r"staggered $\langle M \rangle$ (dichotomic)")
    ax_m.set_xlabel("half-period index")
    ax_m.set_ylim(-1.1, 1.1)
    if title:
        ax_p.set_title(title)
    _finish(fig, path)


def save_correction_figure(path, z_exact, z_raw, z_corrected, title="") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    sites = np.arange(1, len(z_exact) + 1)
    width = 0.27
    ax.bar(sites - width, z_exact, width, label="exact", color="0.4")
    ax.bar(sites, z_raw, width, label="observed", color="tab:red")
    ax.bar(sites + width, z_corrected, width, label="corrected", color="tab:green")
    ax.set_xlabel("site")
    ax.set_ylabel(r"$\langle \sigma^z_i \rangle$")
    ax.set_xticks(sites)
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    _finish(fig, path)
