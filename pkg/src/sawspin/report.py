"""Figure rendering for the CLI report path (file output only)."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

TWO_PI = 2.0 * np.pi


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_spectrum_figure(result, path, kind: str = "cpt"):
    """Signal versus two-photon detuning, with per-configuration traces if present."""
    fig, ax = plt.subplots(figsize=(7, 4))
    x = result.axis / TWO_PI
    if result.per_config is not None:
        ax.plot(x, result.per_config, lw=0.6, alpha=0.4)
    ax.plot(x, result.signal, "k-", lw=1.4)
    ax.set_xlabel("two-photon detuning (MHz)")
    ax.set_ylabel("fluorescence (arb. units)" if kind == "cpt"
                  else "transferred population (arb. units)")
    title = ("coherent population trapping" if kind == "cpt"
             else "sideband spin-transition spectrum")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def save_transient_figure(result_on, result_off, path, fit=None):
    """Resonant and detuned transfer curves, with the fitted model if available."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(result_on.durations, result_on.signal, "o", ms=3, label="on resonance")
    ax.plot(result_off.durations, result_off.signal, "s", ms=3, label="off resonance")
    if fit is not None:
        label = (f"fit: branching {fit.Gamma_flip / TWO_PI:.2f} MHz, "
                 f"Rabi {fit.Omega_R / TWO_PI:.2f} MHz")
        ax.plot([], [], " ", label=label)
    ax.set_xlabel("drive duration (us)")
    ax.set_ylabel("transferred population (arb. units)")
    ax.set_title("transient sideband spin transfer")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def save_budget_figure(budget, path):
    """Log-log scaling of the sideband Rabi frequency and the induced rates."""
    fig, ax = plt.subplots(figsize=(7, 4))
    x = budget.Delta / TWO_PI
    ax.loglog(x, budget.Omega_ss / TWO_PI, "o-", label="sideband Rabi (MHz)")
    ax.loglog(x, budget.pumping_rate / TWO_PI, "s-", label="optical pumping (MHz)")
    ax.loglog(x, budget.decoherence_rate / TWO_PI, "^-", label="induced decoherence (MHz)")
    ax.set_xlabel("dipole detuning (MHz)")
    ax.set_ylabel("rate (MHz)")
    ax.set_title("detuning scaling of drive-induced rates")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)
