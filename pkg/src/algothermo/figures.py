"""Matplotlib renderings for the CLI reports.

Each report command gets one figure next to its delimited output.
Rendering is headless (Agg) and scrubbed of writer metadata so repeat
runs give stable bytes.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .thermo import EntropyBound, ProbeRow, ThermoRow  # noqa: E402

_SAVE = {"dpi": 110, "metadata": {"Software": None}}


def _finish(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def sweep_figure(rows: Sequence[ThermoRow], path: str) -> None:
    """Interval bands for Z, E, S, C against temperature."""
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    panels = [
        ("partition sum Z", lambda r: r.z, axes[0][0]),
        ("mean length E", lambda r: r.e, axes[0][1]),
        ("entropy S", lambda r: r.s, axes[1][0]),
        ("specific heat C", lambda r: r.c, axes[1][1]),
    ]
    temps = [float(r.temp) for r in rows]
    for title, pick, ax in panels:
        los, his, ts = [], [], []
        for r, t in zip(rows, temps):
            iv = pick(r)
            if iv is None:
                continue
            ts.append(t)
            los.append(float(iv.lo.as_fraction()))
            his.append(float(iv.hi.as_fraction()))
        if ts:
            ax.fill_between(ts, los, his, alpha=0.35, linewidth=0)
            ax.plot(ts, [(a + b) / 2 for a, b in zip(los, his)], lw=1.2)
        ax.set_title(title, fontsize=10)
        ax.grid(True, alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("temperature T")
    _finish(fig, path)


def probe_figure(rows: Sequence[ProbeRow], path: str, threshold: float | None = None) -> None:
    """Partial-sum growth; certified lower endpoints are the story."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    cuts = [r.cutoff for r in rows]
    los = [float(r.series.lo.as_fraction()) for r in rows]
    his = [float(r.series.hi.as_fraction()) for r in rows]
    ax.fill_between(cuts, los, his, alpha=0.35, linewidth=0)
    ax.plot(cuts, los, marker="o", ms=3, lw=1.2, label="certified lower bound")
    if threshold is not None:
        ax.axhline(threshold, color="crimson", ls="--", lw=1, label=f"threshold {threshold}")
        ax.legend(fontsize=9)
    ax.set_xlabel("cutoff")
    ax.set_ylabel("partial sum")
    ax.set_xscale("log", base=2)
    ax.grid(True, alpha=0.3)
    _finish(fig, path)


def ensemble_figure(
    micro: Mapping[int, Fraction],
    canonical: Mapping[int, tuple[float, float]],
    path: str,
    empirical: Mapping[int, float] | None = None,
) -> None:
    """Per-length bars: microcanonical vs canonical (vs sampled)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    lengths = sorted(set(micro) | set(canonical))
    w = 0.27
    xs = range(len(lengths))
    ax.bar(
        [x - w for x in xs],
        [float(micro.get(l, 0)) for l in lengths],
        width=w, label="microcanonical",
    )
    mids = [sum(canonical[l]) / 2 if l in canonical else 0 for l in lengths]
    errs = [(canonical[l][1] - canonical[l][0]) / 2 if l in canonical else 0 for l in lengths]
    ax.bar(list(xs), mids, width=w, yerr=errs, label="canonical")
    if empirical is not None:
        ax.bar(
            [x + w for x in xs],
            [empirical.get(l, 0.0) for l in lengths],
            width=w, label="sampled",
        )
    ax.set_xticks(list(xs), [str(l) for l in lengths])
    ax.set_xlabel("first-codeword length")
    ax.set_ylabel("probability")
    ax.legend(fontsize=9)
    ax.grid(True, axis="y", alpha=0.3)
    _finish(fig, path)


def entropy_figure(points: Sequence[tuple[int, float]], path: str) -> None:
    """Monotone lower bound on output entropy along the cutoff schedule."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    ax.step(xs, ys, where="post", lw=1.4)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("cutoff")
    ax.set_ylabel("entropy lower bound (bits)")
    ax.grid(True, alpha=0.3)
    _finish(fig, path)


def kraft_figure(points: Sequence[tuple[int, float]], path: str) -> None:
    """Discovered Kraft mass by enumeration index."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    ax.step(xs, ys, where="post", lw=1.4)
    ax.axhline(1.0, color="crimson", ls="--", lw=1)
    ax.set_xlabel("programs found")
    ax.set_ylabel("sum of 2^-|p|")
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    _finish(fig, path)


def profile_figure(points: Sequence[tuple[int, float, bool]], path: str) -> None:
    """Compression ratios H(prefix)/n; open markers are bounds only."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    exact = [(n, r) for n, r, e in points if e]
    bound = [(n, r) for n, r, e in points if not e]
    if exact:
        ax.plot([p[0] for p in exact], [p[1] for p in exact], "o-", label="exact")
    if bound:
        ax.plot(
            [p[0] for p in bound], [p[1] for p in bound],
            "s", mfc="none", label="lower bound",
        )
    ax.axhline(1.0, color="gray", ls=":", lw=1)
    ax.set_xlabel("prefix length n")
    ax.set_ylabel("H(prefix)/n")
    if exact or bound:
        ax.legend(fontsize=9)
    ax.grid(True, alpha=0.3)
    _finish(fig, path)
