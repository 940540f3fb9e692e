"""Figure rendering for the report commands.

Every report CSV gets a PNG sibling. The Agg backend and stripped
metadata keep output files byte-stable across identical runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, path):
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)


def plot_inner_product_hist(hist_structured, hist_uniform, q, threshold, path):
    """Per-residue frequencies of p for both labels, with the decision band."""
    hist_s = np.asarray(hist_structured, dtype=np.float64)
    hist_u = np.asarray(hist_uniform, dtype=np.float64)
    xs = np.arange(q)
    fig, ax = plt.subplots(figsize=(7, 4))
    if hist_s.sum() > 0:
        ax.bar(xs, hist_s / hist_s.sum(), width=1.0, alpha=0.6,
               label="structured", color="tab:blue")
    if hist_u.sum() > 0:
        ax.plot(xs, hist_u / hist_u.sum(), drawstyle="steps-mid",
                color="tab:red", label="uniform")
    ax.axvline(threshold, color="k", lw=0.8, ls="--", label=f"threshold {threshold}")
    ax.axvline(q - threshold, color="k", lw=0.8, ls="--")
    ax.set_xlabel("inner product p")
    ax.set_ylabel("frequency")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def plot_representability(stats, path):
    """Fraction of instances whose shortest vector fits y qubits per basis.

    stats: iterable of RepresentabilityStat.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    qs = [s.qubits for s in stats]
    for which, marker in (("overall", "o"), ("conditional", "s")):
        fracs = np.array([getattr(s, which)[2] for s in stats])
        los = np.array([getattr(s, which)[3] for s in stats])
        his = np.array([getattr(s, which)[4] for s in stats])
        err = np.vstack([fracs - los, his - fracs])
        ax.errorbar(qs, fracs, yerr=err, marker=marker, capsize=3, label=which)
    ax.set_xlabel("qubits per basis vector")
    ax.set_ylabel("representable fraction")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xticks(qs)
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def plot_sweep(rows, qubit_counts, path):
    """Problem-size sweep: shortest-vector-beats-reduction proportion on
    top, per-qubit representability below."""
    ns = [r["n"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    props = np.array([r["v0_shorter_fraction"] for r in rows])
    los = np.array([r["v0_shorter_lo"] for r in rows])
    his = np.array([r["v0_shorter_hi"] for r in rows])
    ax1.errorbar(ns, props, yerr=np.vstack([props - los, his - props]),
                 marker="o", capsize=3, color="tab:blue")
    ax1.set_ylabel("fraction with shorter vector")
    ax1.set_ylim(-0.02, 1.02)
    for y in qubit_counts:
        ax2.plot(ns, [r[f"repr_{y}_conditional"] for r in rows],
                 marker="o", label=f"{y} qubits")
    ax2.set_xlabel("problem size n")
    ax2.set_ylabel("success probability")
    ax2.set_ylim(-0.02, 1.02)
    ax2.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def plot_landscape(betas, gammas, surface, scale, path):
    """Energy surface over one (beta, gamma) period."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    g_scaled = np.asarray(gammas) / scale
    mesh = ax.pcolormesh(g_scaled, betas, surface, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="energy")
    bi, gj = np.unravel_index(int(np.argmin(surface)), surface.shape)
    ax.plot(g_scaled[gj], betas[bi], "r*", ms=12, label="grid minimum")
    ax.set_xlabel("gamma / scale")
    ax.set_ylabel("beta")
    ax.legend(frameon=False, loc="upper right")
    fig.tight_layout()
    _save(fig, path)


def plot_trajectory(energies, path):
    """Expected energy along the optimization trajectory."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(energies)), energies, marker="o")
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy")
    fig.tight_layout()
    _save(fig, path)


def plot_state_histogram(counts, ground_mask, path):
    """Sampled counts per computational basis state; ground states marked."""
    counts = np.asarray(counts)
    n = int(np.log2(len(counts)))
    xs = np.arange(len(counts))
    colors = np.where(ground_mask, "tab:red", "tab:blue")
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(xs, counts / counts.sum(), color=colors, width=0.9)
    ax.set_xlabel(f"basis state (index over {n} qubits)")
    ax.set_ylabel("frequency")
    fig.tight_layout()
    _save(fig, path)
