"""Artifact writers: CSV, JSON (17 significant digits), run manifests, figures.

Every CLI command writes a RunManifest keyed by a hash of its canonical
configuration; identical configurations reproduce identical hashes and
bitwise-identical numeric outputs.  Figures are rendered headlessly next to
the delimited output files.
"""

import hashlib
import json
import os
import time

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import __version__


def _fmt_float(x):
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def json17(obj, indent=0):
    """Serialize to JSON with floats at 17 significant digits.

    The stock encoder uses shortest-roundtrip floats; a fixed 17-digit form
    keeps files byte-stable across platforms and python versions.
    """
    pad = " " * indent
    if isinstance(obj, dict):
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {json17(v, indent + 2).lstrip()}'
            for k, v in obj.items()
        )
        return f"{pad}{{\n{items}\n{pad}}}" if obj else f"{pad}{{}}"
    if isinstance(obj, (list, tuple)):
        items = ", ".join(json17(v).lstrip() for v in obj)
        return f"{pad}[{items}]"
    if isinstance(obj, bool):
        return pad + ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return pad + str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return pad + _fmt_float(float(obj))
    if isinstance(obj, complex):
        return json17({"re": obj.real, "im": obj.imag}, indent)
    if obj is None:
        return pad + "null"
    return pad + json.dumps(str(obj))


def config_hash(config):
    """Hex digest of the canonical configuration serialization."""
    canonical = json17({k: config[k] for k in sorted(config)})
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json17(obj))
        fh.write("\n")


def write_csv(path, header, rows):
    """CSV with an exact header row, '.' decimal, 17-significant-digit floats."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, (float, np.floating)):
                    cells.append(_fmt_float(float(v)))
                elif isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


class ManifestWriter:
    """Collects produced files and writes the RunManifest for one command."""

    def __init__(self, command, parameters, out_dir):
        self.command = command
        self.parameters = parameters
        self.out_dir = out_dir
        self.outputs = []
        self.t0 = time.time()
        os.makedirs(out_dir, exist_ok=True)
        self.hash = config_hash({"command": command, **parameters})

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.outputs.append(p)
        return p

    def finalize(self):
        manifest = {
            "command": self.command,
            "config_hash": self.hash,
            "parameters": self.parameters,
            "outputs": [os.path.basename(p) for p in self.outputs],
            "wall_time_s": time.time() - self.t0,
            "tool_version": __version__,
        }
        path = os.path.join(self.out_dir, f"manifest_{self.hash}.json")
        write_json(path, manifest)
        return path


def _style(ax, xlabel, ylabel, title=None):
    ax.grid(True, which="both", alpha=0.3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)


def render_timeseries(path, hist, lam=None, a_sat=None):
    """Mode-amplitude history on a log scale, with the linear-growth guide."""
    ts, a1, a2 = hist[:, 0], hist[:, 3], hist[:, 4]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(ts, np.maximum(a1, 1e-300), label=r"$|\phi_1|$")
    pos = a2 > 0
    if pos.any():
        ax.semilogy(ts[pos], a2[pos], label=r"$|\phi_2|$", alpha=0.7)
    if lam is not None and np.isfinite(lam) and a1[0] > 0:
        ax.semilogy(ts, a1[0] * np.exp(lam * ts), "k--", lw=0.8,
                    label=rf"$\propto e^{{{lam:.3g} t}}$")
    if a_sat is not None and np.isfinite(a_sat):
        ax.axhline(a_sat, color="gray", lw=0.8, ls=":")
    ax.set_ylim(bottom=max(a1[a1 > 0].min() * 0.5, 1e-300) if (a1 > 0).any() else None)
    _style(ax, "t", "mode amplitude")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_scan(path, lams, values):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(lams, values, "o-", ms=3)
    ax.axhline(0.0, color="k", lw=0.8)
    _style(ax, r"$\lambda$", r"$\Lambda(\gamma,\lambda)$")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_sweep(path, rows, axis):
    """Log-log magnitudes of the cubic parts against the swept axis."""
    ax_idx = {"gamma": 0, "lambda": 1}[axis]
    xs = np.array([r[ax_idx] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for col, name in ((3, "|c3_1|"), (4, "|c3_2|"), (5, "|c3_3|"), (6, "|c3|"),
                      (7, "|c5_partial|")):
        ys = np.abs(np.array([r[col] for r in rows], dtype=float))
        keep = ys > 0
        if keep.any():
            ax.loglog(xs[keep], ys[keep], "o-", ms=3, label=name)
    _style(ax, axis, "coefficient magnitude")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_mellin(path, lams, scaled, prediction):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogx(lams, scaled, "o-", ms=4, label="scaled sum")
    ax.axhline(prediction, color="k", ls="--", lw=0.9, label="pole prediction")
    _style(ax, r"$\lambda$", r"$\lambda^{2(\alpha+1)}\,\varphi^+_\alpha$")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_regime_map(path, gammas, lams, labels):
    colors = {"I": 0, "II": 1, "III": 2, "boundary": 3}
    fig, ax = plt.subplots(figsize=(6.0, 4.8))
    grid = np.array([[colors[labels[(g, l)]] for l in lams] for g in gammas])
    pc = ax.pcolormesh(
        lams, gammas, grid, cmap=plt.get_cmap("viridis", 4), vmin=-0.5, vmax=3.5
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    cb = fig.colorbar(pc, ticks=[0, 1, 2, 3])
    cb.ax.set_yticklabels(["I", "II", "III", "boundary"])
    _style(ax, r"$\lambda$", r"$\gamma$")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
