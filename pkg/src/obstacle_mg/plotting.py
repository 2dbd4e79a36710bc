"""Report figures rendered next to the CSV output of the CLI."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_field(values: np.ndarray, n: int, path, title: str, cmap: str = "viridis"):
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(values.reshape(n, n), origin="lower", extent=(0, 1, 0, 1), cmap=cmap)
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(title)
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_contact(contact: np.ndarray, n: int, path):
    fig, ax = plt.subplots(figsize=(3.8, 3.6))
    ax.imshow(contact.reshape(n, n), origin="lower", extent=(0, 1, 0, 1),
              cmap="viridis", vmin=0, vmax=1)
    ax.set_title("contact set")
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_convergence(rows: list, path):
    dofs = [r["dofs"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    ax.loglog(dofs, [r["h1_error"] for r in rows], "o-", label="$H^1$")
    ax.loglog(dofs, [r["l2_error"] for r in rows], "s-", label="$L^2$")
    ax.set_xlabel("degrees of freedom")
    ax.set_ylabel("relative error vs reference")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_per_level(errors_h1: np.ndarray, errors_l2: np.ndarray, path):
    levels = np.arange(1, len(errors_h1) + 1)
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    plot = ax.semilogy if (np.any(errors_h1 > 0) or np.any(errors_l2 > 0)) \
        else ax.plot
    plot(levels, errors_h1, "o-", label="$H^1$")
    plot(levels, errors_l2, "s-", label="$L^2$")
    ax.set_xlabel("level")
    ax.set_ylabel("relative correction error")
    ax.set_xticks(levels)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
