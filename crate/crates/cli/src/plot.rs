//! Generated matplotlib scripts that redraw a run from its CSV files.

const PRELUDE: &str = r#"#!/usr/bin/env python3
# Generated by magnon; redraws this run from the CSV files next to it.
import csv
import os

import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name)) as f:
        rows = list(csv.reader(f))
    return rows[0], np.array(rows[1:], dtype=float)

"#;

pub fn evolve_script(snapshots: &[String]) -> String {
    let names = snapshots
        .iter()
        .map(|s| format!("{s:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        r#"{PRELUDE}
header, series = load("series.csv")
fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
axes[0].plot(series[:, 0], series[:, 2])
axes[0].set_xlabel("t / T_B")
axes[0].set_ylabel("F")
axes[1].plot(series[:, 0], series[:, 4])
axes[1].set_xlabel("t / T_B")
axes[1].set_ylabel("D")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "series.png"), dpi=150)

if os.path.exists(os.path.join(HERE, "spin_distribution.csv")):
    header, sz = load("spin_distribution.csv")
    sites = np.array(header[1:], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(sz[:, 0], sites, sz[:, 1:].T, shading="auto", cmap="viridis")
    ax.set_xlabel("t / T_B")
    ax.set_ylabel("l")
    fig.colorbar(mesh, label="S^z_l")
    fig.savefig(os.path.join(HERE, "spin_distribution.png"), dpi=150)

for name in [{names}]:
    if not os.path.exists(os.path.join(HERE, name)):
        continue
    header, m = load(name)
    sites = np.array(header[1:], dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    mesh = ax.pcolormesh(sites, sites, m[:, 1:], shading="auto", cmap="RdBu_r")
    ax.set_title(name)
    ax.set_xlabel("l'")
    ax.set_ylabel("l''")
    fig.colorbar(mesh)
    fig.savefig(os.path.join(HERE, name.replace(".csv", ".png")), dpi=150)
"#
    )
}

pub fn spectrum_script() -> String {
    format!(
        r#"{PRELUDE}
header, s = load("spectrum.csv")
k, e, bound, p = s[:, 1], s[:, 2], s[:, 3] > 0, s[:, 4]
fig, ax = plt.subplots(figsize=(5, 4))
ax.scatter(k[~bound], e[~bound], s=2, c="gray", label="scattering")
ax.scatter(k[bound], e[bound], s=6, c="crimson", label="bound")
ax.set_xlabel("K")
ax.set_ylabel("E")
ax.legend()
fig.savefig(os.path.join(HERE, "spectrum.png"), dpi=150)
"#
    )
}

pub fn effective_script() -> String {
    format!(
        r#"{PRELUDE}
header, s = load("effective.csv")
fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
axes[0].plot(s[:, 0], s[:, 2], label="full")
axes[0].plot(s[:, 0], s[:, 3], "--", label="effective")
axes[0].set_ylabel("l_c")
axes[1].plot(s[:, 0], s[:, 4], label="full")
axes[1].plot(s[:, 0], s[:, 5], "--", label="effective")
axes[1].set_ylabel("D")
for ax in axes:
    ax.set_xlabel("t / T_B")
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "effective.png"), dpi=150)
"#
    )
}

pub fn symmetry_script() -> String {
    format!(
        r#"{PRELUDE}
header, s = load("symmetry_trace.csv")
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.plot(s[:, 0], s[:, 2], label=header[2])
ax.plot(s[:, 0], s[:, 3], "--", label=header[3])
ax.set_xlabel("t / T_B")
ax.set_ylabel("C")
ax.legend()
fig.savefig(os.path.join(HERE, "symmetry_trace.png"), dpi=150)
"#
    )
}

pub fn analyze_script(spectrum: &str, peaks: &str) -> String {
    format!(
        r#"{PRELUDE}
header, s = load({spectrum:?})
_, p = load({peaks:?})
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.plot(s[:, 0], s[:, 1])
if p.size:
    p = p.reshape(-1, 3)
    ax.plot(p[:, 0], p[:, 1], "o")
ax.set_xlabel("omega")
ax.set_ylabel("|f(omega)|")
fig.savefig(os.path.join(HERE, {spectrum:?}.replace(".csv", ".png")), dpi=150)
"#
    )
}
