"""Figure rendering for the report path: one PNG per table kind, next to the CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def _short(domain: str) -> str:
    return domain.split(".", 1)[0]


def render_crossmatrix(rows: list[dict], out_dir: Path) -> Path:
    domains = sorted({r["trained_on"] for r in rows})
    n = len(domains)
    grid = np.full((n, n), np.nan)
    for row in rows:
        if row["macro_f1"] is not None:
            i = domains.index(row["trained_on"])
            j = domains.index(row["tested_on"])
            grid[i, j] = row["macro_f1"]
    fig, ax = plt.subplots(figsize=(max(5, 0.5 * n + 2),) * 2)
    image = ax.imshow(grid, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(n), [_short(d) for d in domains], rotation=90, fontsize=7)
    ax.set_yticks(range(n), [_short(d) for d in domains], fontsize=7)
    ax.set_xlabel("tested on")
    ax.set_ylabel("trained on")
    fig.colorbar(image, ax=ax, label="macro-F1", shrink=0.8)
    return _save(fig, out_dir / "fig_crossmatrix.png")


def render_modpair(rows: list[dict], out_dir: Path) -> Path:
    rows = [r for r in rows if r["ensemble_macro_f1"] is not None]
    names = [_short(r["instance"]) for r in rows]
    x = np.arange(len(rows))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(rows) + 2), 4))
    ax.bar(x - width / 2, [r["local_macro_f1"] for r in rows], width, label="own model")
    ax.bar(
        x + width / 2,
        [r["ensemble_macro_f1"] for r in rows],
        width,
        label="top-k vote",
    )
    ax.set_xticks(x, names, rotation=90, fontsize=7)
    ax.set_ylabel("macro-F1")
    ax.set_ylim(0, 1.05)
    ax.legend()
    return _save(fig, out_dir / "fig_modpair.png")


def render_pairing(rows: list[dict], out_dir: Path) -> Path:
    domains = sorted({r["instance"] for r in rows} | {r["peer"] for r in rows})
    n = len(domains)
    grid = np.full((n, n), np.nan)
    for row in rows:
        i = domains.index(row["instance"])
        j = domains.index(row["peer"])
        grid[i, j] = row["similarity"]
    fig, ax = plt.subplots(figsize=(max(5, 0.5 * n + 2),) * 2)
    image = ax.imshow(grid, vmin=0.0, vmax=1.0, cmap="magma")
    ax.set_xticks(range(n), [_short(d) for d in domains], rotation=90, fontsize=7)
    ax.set_yticks(range(n), [_short(d) for d in domains], fontsize=7)
    ax.set_xlabel("peer")
    ax.set_ylabel("instance")
    fig.colorbar(image, ax=ax, label="cosine similarity", shrink=0.8)
    return _save(fig, out_dir / "fig_similarity.png")


def render_noise(rows: list[dict], out_dir: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    flip_rows = [r for r in rows if r["mode"] == "random_flip"]
    levels = sorted({float(r["level"]) for r in flip_rows})

    def mean_at(level, key):
        values = [
            r[key]
            for r in flip_rows
            if float(r["level"]) == level and r[key] is not None
        ]
        return float(np.mean(values)) if values else np.nan

    ax.plot(
        levels,
        [100 * mean_at(lv, "local_degradation") for lv in levels],
        marker="o",
        label="own model",
    )
    ax.plot(
        levels,
        [100 * mean_at(lv, "ensemble_degradation") for lv in levels],
        marker="s",
        label="top-k vote",
    )
    topic_rows = [
        r for r in rows if r["mode"] == "topic_whitelist" and r["local_degradation"] is not None
    ]
    if topic_rows:
        topic_mean = 100 * float(np.mean([r["local_degradation"] for r in topic_rows]))
        ax.axhline(topic_mean, linestyle="--", color="gray", label="topic whitelist (own)")
    ax.set_xlabel("flipped label fraction")
    ax.set_ylabel("macro-F1 degradation (%)")
    ax.legend()
    return _save(fig, out_dir / "fig_noise.png")


def render_budget(rows: list[dict], out_dir: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in sorted({r["mode"] for r in rows}):
        mode_rows = [r for r in rows if r["mode"] == mode and r["macro_f1"] is not None]
        sizes = sorted({r["n_used"] for r in mode_rows})
        means = [
            float(np.mean([r["macro_f1"] for r in mode_rows if r["n_used"] == n]))
            for n in sizes
        ]
        ax.plot(sizes, means, marker="o", label=f"{mode} n")
    ax.set_xlabel("annotated toots (n)")
    ax.set_ylabel("macro-F1")
    ax.legend()
    return _save(fig, out_dir / "fig_budget.png")


_RENDERERS = {
    "crossmatrix": render_crossmatrix,
    "modpair": render_modpair,
    "pairing": render_pairing,
    "noise": render_noise,
    "budget": render_budget,
}


def render_tables(tables: dict[str, list[dict]], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in tables.items():
        renderer = _RENDERERS.get(name)
        if renderer is not None and rows:
            written.append(renderer(rows, out))
    return written
