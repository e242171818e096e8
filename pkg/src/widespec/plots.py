"""Figure rendering for the report path.

Every report CSV gets a PNG sibling so a scan of the output directory tells
the whole story without loading the data anywhere.  Rendering is headless
(Agg) and byte-stable: fixed metadata, no timestamps.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .spectral import Spectrum  # noqa: E402

__all__ = ["save_spectrum_figure", "save_keyrate_figure"]

_SAVEFIG_KW = {"dpi": 150, "metadata": {"Software": "widespec"}}


def save_spectrum_figure(path, curves, ylabel: str, title: str = "",
                         band=None) -> None:
    """Line plot of one or more spectra.

    ``curves`` is a list of ``(label, Spectrum)`` pairs; labels may be empty
    for a single anonymous trace.
    """
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    for label, spectrum in curves:
        ax.plot(spectrum.grid, spectrum.values, lw=0.9, label=label or None)
    ax.set_xlabel("Wavelength (nm)")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if band is not None:
        ax.set_xlim(band.lo, band.hi)
    ax.grid(True, alpha=0.3)
    if any(label for label, _ in curves):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def save_keyrate_figure(path, curves, title: str = "") -> None:
    """Semi-log key-rate curves.

    ``curves`` is a list of ``(label, distances_km, rates)``; zero-rate
    points are dropped from the log plot.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    for label, distances, rates in curves:
        xs = [d for d, r in zip(distances, rates) if r > 0]
        ys = [r for r in rates if r > 0]
        if xs:
            ax.semilogy(xs, ys, lw=1.1, label=label or None)
    ax.set_xlabel("Distance (km)")
    ax.set_ylabel("Secret key rate (bits/pulse)")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if any(label for label, _, _ in curves):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
