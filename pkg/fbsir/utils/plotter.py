import logging

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pylab as plt

logger = logging.getLogger(__name__)

# stable element ids, so that identical runs give identical SVG files
matplotlib.rcParams["svg.hashsalt"] = "fbsir"


def plot_series(series, filename, h0=None, h0_star=None):
    """
    Plots the front position and the peak of the infected density against time.

    Args:
        series (pd.DataFrame): time series of a run
        filename (str): output file, the extension sets the format
        h0 (float): initial radius, draws the 4 h0 level
        h0_star (float): critical radius, drawn when finite

    Returns:
        str: filename

    """
    t = series["t"].to_numpy()
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex="col")
    ax1.plot(t, series["h"].to_numpy(), "k-", label="h(t)")
    if h0 is not None:
        ax1.axhline(4 * h0, color="tab:blue", ls="--", label="4 h0")
    if h0_star is not None and np.isfinite(h0_star):
        ax1.axhline(h0_star, color="tab:red", ls=":", label="h0*")
    ax1.set_ylabel("Front position")
    ax1.legend(loc="best")

    sup_i = series["sup_I"].to_numpy()
    positive = sup_i > 0
    ax2.semilogy(t[positive], sup_i[positive], "k-")
    ax2.set_ylabel("sup I")
    ax2.set_xlabel("Time")

    plt.tight_layout()
    plt.savefig(filename, bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    logger.debug(f"Saved {filename}")
    return filename


def plot_profiles(frames, filename, max_curves=12):
    """
    Overlays the infected profiles of saved frames.

    Args:
        frames (list): saved frames
        filename (str): output file
        max_curves (int): maximum number of frames drawn, evenly picked

    Returns:
        str: filename

    """
    if not frames:
        raise ValueError("no frames to plot")
    picks = np.unique(np.linspace(0, len(frames) - 1, min(max_curves, len(frames))).astype(int))
    fig = plt.figure(figsize=(7, 4))
    ax = fig.add_subplot(111)
    colors = plt.cm.viridis(np.linspace(0, 1, len(picks)))
    for color, index in zip(colors, picks):
        frame = frames[index]
        ax.plot(frame.r_mapped, frame.i_mapped, color=color, label=f"t={frame.t:.4g}")
    ax.set_xlabel("r")
    ax.set_ylabel("I")
    ax.legend(loc="best", fontsize="small")
    plt.tight_layout()
    plt.savefig(filename, bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    logger.debug(f"Saved {filename}")
    return filename
