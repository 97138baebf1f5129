"""Self-contained SVG rendering of a periodogram.

Written by hand so that the output depends only on the data: fixed
number formatting, no timestamps, no font metrics.
"""

from __future__ import annotations

import numpy as np

from .spectral import Periodogram

WIDTH = 800
HEIGHT = 400
MARGIN = 50
FLOOR_DB = -100.0
MAX_POINTS = 2000


def _fmt(x):
    return f"{x:.2f}"


def _star(cx, cy, r):
    pts = []
    for k in range(10):
        rad = r if k % 2 == 0 else 0.45 * r
        ang = np.pi / 2 + k * np.pi / 5
        pts.append(f"{_fmt(cx + rad * np.cos(ang))},{_fmt(cy - rad * np.sin(ang))}")
    return " ".join(pts)


def periodogram_svg(pgram: Periodogram, true_energies=None, band=None) -> str:
    """Magnitude in dB against energy, with optional markers at true energies.

    The horizontal axis is energy (minus the angular frequency), so lines
    sit where the eigenvalues are.  ``band = (lo, hi)`` crops the axis.
    """
    energy = -pgram.omega[::-1]
    mag = pgram.magnitude[::-1]
    if band is not None:
        keep = (energy >= band[0]) & (energy <= band[1])
        energy, mag = energy[keep], mag[keep]
    db = 20.0 * np.log10(np.maximum(mag / mag.max(), 10.0 ** (FLOOR_DB / 20.0)))
    if energy.size > MAX_POINTS:
        # bucket maxima keep every peak visible after thinning
        edges = np.linspace(0, energy.size, MAX_POINTS + 1).astype(int)
        idx = np.array([lo + int(np.argmax(db[lo:hi])) for lo, hi in zip(edges[:-1], edges[1:])])
        energy, db = energy[idx], db[idx]

    x0, x1 = float(energy[0]), float(energy[-1])
    span = x1 - x0 if x1 > x0 else 1.0

    def sx(e):
        return MARGIN + (e - x0) / span * (WIDTH - 2 * MARGIN)

    def sy(d):
        return MARGIN + (d / FLOOR_DB) * (HEIGHT - 2 * MARGIN)

    line = " ".join(f"{_fmt(sx(e))},{_fmt(sy(d))}" for e, d in zip(energy, db))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>',
        f'<polyline fill="none" stroke="navy" stroke-width="1" points="{line}"/>',
    ]
    if true_energies is not None:
        for e in np.asarray(true_energies, float):
            if x0 <= e <= x1:
                d = float(np.interp(e, energy, db))
                out.append(
                    f'<polygon fill="green" stroke="darkgreen" points="{_star(sx(e), sy(d) - 8, 6)}"/>'
                )
    for frac in (0.0, 0.5, 1.0):
        e = x0 + frac * span
        out.append(
            f'<text x="{_fmt(sx(e))}" y="{HEIGHT - MARGIN + 18}" font-size="12" '
            f'text-anchor="middle">{e:.3g}</text>'
        )
    for d in (0.0, FLOOR_DB / 2, FLOOR_DB):
        out.append(
            f'<text x="{MARGIN - 6}" y="{_fmt(sy(d) + 4)}" font-size="12" '
            f'text-anchor="end">{d:.0f}</text>'
        )
    out.append(
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 8}" font-size="13" text-anchor="middle">'
        "energy relative to vacuum</text>"
    )
    out.append(
        f'<text x="14" y="{HEIGHT // 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 14 {HEIGHT // 2})">|X| (dB)</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
