"""Bare-bones SVG output for eyeballing results; no plotting library needed."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_W, _H, _PAD = 420, 320, 48
_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _doc(body, title):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'font-family="sans-serif" font-size="11">\n'
            f'<text x="{_W / 2}" y="16" text-anchor="middle">{escape(title)}</text>\n'
            + "\n".join(body) + "\n</svg>\n")


def _scale(v, lo, hi, a, b):
    return a + (b - a) * (0.5 if hi == lo else (v - lo) / (hi - lo))


def heatmap(values, labels, title="distance matrix") -> str:
    v = np.asarray(values, dtype=float)
    S = len(labels)
    size = min(_W, _H) - 2 * _PAD
    cell = size / max(S, 1)
    top = v.max() or 1.0
    body = []
    for i in range(S):
        for j in range(S):
            g = int(255 * (1 - v[i, j] / top))
            body.append(f'<rect x="{_PAD + j * cell:.2f}" y="{_PAD + i * cell:.2f}" width="{cell:.2f}" '
                        f'height="{cell:.2f}" fill="rgb(255,{g},{g})"/>')
        body.append(f'<text x="{_PAD - 4}" y="{_PAD + (i + 0.6) * cell:.2f}" '
                    f'text-anchor="end">{escape(labels[i])}</text>')
        body.append(f'<text x="{_PAD + (i + 0.5) * cell:.2f}" y="{_PAD - 4}" '
                    f'text-anchor="middle">{escape(labels[i])}</text>')
    return _doc(body, title)


def scatter(x, y, labels, title="embedding", xlabel="PC1", ylabel="PC2") -> str:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    body = [f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
            f'fill="none" stroke="#999"/>',
            f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="14" y="{_H / 2}" transform="rotate(-90 14 {_H / 2})" '
            f'text-anchor="middle">{escape(ylabel)}</text>']
    for k, lab in enumerate(labels):
        px = _scale(x[k], x.min(), x.max(), _PAD + 10, _W - _PAD - 10)
        py = _scale(y[k], y.min(), y.max(), _H - _PAD - 10, _PAD + 10)
        body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" fill="{_COLORS[k % len(_COLORS)]}"/>')
        body.append(f'<text x="{px + 6:.2f}" y="{py - 6:.2f}">{escape(lab)}</text>')
    return _doc(body, title)


def histograms(edges, counts_list, names, title="pair distances") -> str:
    edges = np.asarray(edges, dtype=float)
    top = max(int(np.max(c)) for c in counts_list) or 1
    body = [f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
            f'fill="none" stroke="#999"/>']
    for k, (counts, name) in enumerate(zip(counts_list, names)):
        pts = []
        for b, c in enumerate(counts):
            y = _scale(c, 0, top, _H - _PAD, _PAD)
            pts.append(f"{_scale(edges[b], edges[0], edges[-1], _PAD, _W - _PAD):.2f},{y:.2f}")
            pts.append(f"{_scale(edges[b + 1], edges[0], edges[-1], _PAD, _W - _PAD):.2f},{y:.2f}")
        color = _COLORS[k % len(_COLORS)]
        body.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}"/>')
        body.append(f'<text x="{_W - _PAD - 4}" y="{_PAD + 14 * (k + 1)}" text-anchor="end" '
                    f'fill="{color}">{escape(name)}</text>')
    return _doc(body, title)
