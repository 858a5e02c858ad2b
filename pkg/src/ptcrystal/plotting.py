"""PNG renderings of the CLI outputs, written next to the CSV files."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_bands(path, kappa, energies, fit_values=None, k_bragg=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = kappa / k_bragg if k_bragg else kappa
        for b, e in enumerate(energies):
            ax.plot(x, e.real, lw=1.2, label=f"band {b}")
        if fit_values is not None:
            ax.plot(x, fit_values, "k:", lw=1.0, label="sinusoidal fit")
        ax.set_xlabel(r"$\kappa / k_B$" if k_bragg else r"$\kappa$ ($\mu$m$^{-1}$)")
        ax.set_ylabel("Re E")
        ax.legend()
        return _save(fig, path)


def plot_curve(path, x, ys, xlabel, ylabel, labels=None, marks=()):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, y in enumerate(ys):
            ax.plot(x, y, lw=1.2, label=None if labels is None else labels[i])
        for m in marks:
            ax.axvline(m, color="k", ls=":", lw=0.8)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if labels is not None:
            ax.legend()
        return _save(fig, path)


def plot_intensity(path, x, z, intensity):
    """``|psi(x, z)|`` map; rows of ``intensity`` follow ``z``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.pcolormesh(x, z, np.asarray(intensity), shading="auto", cmap="magma", rasterized=True)
        ax.set_xlabel(r"x ($\mu$m)")
        ax.set_ylabel(r"z ($\mu$m)")
        return _save(fig, path)
