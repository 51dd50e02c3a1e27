"""Minimal deterministic SVG charts: polylines with axes, and heatmaps.

Output depends only on the input numbers, so reruns produce identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)
PALETTE = ("#1f3b73", "#2a9d8f", "#e76f51", "#8d5fd3", "#e9c46a", "#264653", "#d62828", "#6c757d")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.3g}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


class _Axes:
    def __init__(self, xlo, xhi, ylo, yhi, logx=False, logy=False):
        self.logx, self.logy = logx, logy
        self.xlo, self.xhi = self._pad(self._t(xlo, logx), self._t(xhi, logx))
        self.ylo, self.yhi = self._pad(self._t(ylo, logy), self._t(yhi, logy))
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    @staticmethod
    def _t(v, log):
        return math.log10(v) if log else v

    @staticmethod
    def _pad(lo, hi):
        if hi - lo < 1e-12:
            return lo - 0.5, hi + 0.5
        return lo, hi

    def px(self, x):
        return self.x0 + (self._t(x, self.logx) - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def py(self, y):
        return self.y0 + (self._t(y, self.logy) - self.ylo) / (self.yhi - self.ylo) * (self.y1 - self.y0)

    def frame(self, xlabel, ylabel) -> list[str]:
        out = [f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" height="{self.y0 - self.y1}" '
               'fill="none" stroke="#333" stroke-width="1"/>']
        for axis in ("x", "y"):
            lo, hi = (self.xlo, self.xhi) if axis == "x" else (self.ylo, self.yhi)
            log = self.logx if axis == "x" else self.logy
            for t in _nice_ticks(lo, hi):
                label = _tick_label(10**t if log else t)
                if axis == "x":
                    x = self.x0 + (t - lo) / (hi - lo) * (self.x1 - self.x0)
                    out.append(f'<line x1="{_fmt(x)}" y1="{self.y0}" x2="{_fmt(x)}" y2="{self.y0 + 5}" stroke="#333"/>')
                    out.append(f'<text x="{_fmt(x)}" y="{self.y0 + 18}" font-size="11" text-anchor="middle">{label}</text>')
                else:
                    y = self.y0 + (t - lo) / (hi - lo) * (self.y1 - self.y0)
                    out.append(f'<line x1="{self.x0 - 5}" y1="{_fmt(y)}" x2="{self.x0}" y2="{_fmt(y)}" stroke="#333"/>')
                    out.append(f'<text x="{self.x0 - 8}" y="{_fmt(y + 4)}" font-size="11" text-anchor="end">{label}</text>')
        cx = (self.x0 + self.x1) / 2
        cy = (self.y0 + self.y1) / 2
        out.append(f'<text x="{_fmt(cx)}" y="{HEIGHT - 15}" font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="18" y="{_fmt(cy)}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 18 {_fmt(cy)})">{escape(ylabel)}</text>')
        return out


def _document(body: list[str], title: str) -> str:
    head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.0f}" y="24" font-size="15" text-anchor="middle">{escape(title)}</text>']
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _usable(v, log):
    return v is not None and math.isfinite(v) and (not log or v > 0)


def line_chart(series, title: str = "", xlabel: str = "", ylabel: str = "",
               logx: bool = False, logy: bool = False) -> str:
    """``series`` is a list of (label, xs, ys); ``None`` y-values leave gaps in the line."""
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if _usable(x, logx) and _usable(y, logy)]
    if not pts:
        return _document(['<text x="320" y="210" text-anchor="middle">no data</text>'], title)
    xs_all = [p[0] for p in pts]
    ys_all = [p[1] for p in pts]
    ax = _Axes(min(xs_all), max(xs_all), min(ys_all), max(ys_all), logx, logy)
    body = ax.frame(xlabel, ylabel)
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        runs, cur = [], []
        for x, y in zip(xs, ys):
            if _usable(x, logx) and _usable(y, logy):
                cur.append(f"{_fmt(ax.px(x))},{_fmt(ax.py(y))}")
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        for run in runs:
            if len(run) == 1:
                cx, cy = run[0].split(",")
                body.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
            else:
                body.append(f'<polyline points="{" ".join(run)}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = MARGIN["top"] + 16 * i + 8
        lx = WIDTH - MARGIN["right"] + 12
        body.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{lx + 24}" y="{ly + 4}" font-size="11">{escape(str(label))}</text>')
    return _document(body, title)


def _color_scale(t: float) -> str:
    """Light-to-dark blue ramp for t in [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    lo, hi = (247, 251, 255), (8, 48, 107)
    r, g, b = (round(a + (c - a) * t) for a, c in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(xs, ys, z, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """``z[j][i]`` is the value at (xs[i], ys[j]); ``None`` cells are drawn grey."""
    vals = [v for row in z for v in row if v is not None and math.isfinite(v)]
    zlo, zhi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    span = zhi - zlo or 1.0
    ax = _Axes(min(xs), max(xs), min(ys), max(ys))
    nx, ny = len(xs), len(ys)
    cw = (ax.x1 - ax.x0) / nx
    ch = (ax.y0 - ax.y1) / ny
    body = []
    for j in range(ny):
        for i in range(nx):
            v = z[j][i]
            fill = "#bbbbbb" if v is None or not math.isfinite(v) else _color_scale((v - zlo) / span)
            x = ax.x0 + i * cw
            y = ax.y0 - (j + 1) * ch
            body.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cw + 0.3)}" height="{_fmt(ch + 0.3)}" fill="{fill}"/>')
    # the cells fill the frame, so ticks are placed on cell centres
    ax.xlo, ax.xhi = min(xs) - 0.5 * _spacing(xs), max(xs) + 0.5 * _spacing(xs)
    ax.ylo, ax.yhi = min(ys) - 0.5 * _spacing(ys), max(ys) + 0.5 * _spacing(ys)
    body.extend(ax.frame(xlabel, ylabel))
    lx = WIDTH - MARGIN["right"] + 20
    for k in range(11):
        t = k / 10
        y = ax.y0 - t * (ax.y0 - ax.y1)
        body.append(f'<rect x="{lx}" y="{_fmt(y - (ax.y0 - ax.y1) / 11)}" width="16" '
                    f'height="{_fmt((ax.y0 - ax.y1) / 11 + 0.3)}" fill="{_color_scale(t)}"/>')
    body.append(f'<text x="{lx + 22}" y="{ax.y0}" font-size="11">{_tick_label(zlo)}</text>')
    body.append(f'<text x="{lx + 22}" y="{ax.y1 + 10}" font-size="11">{_tick_label(zhi)}</text>')
    return _document(body, title)


def _spacing(v) -> float:
    v = sorted(v)
    return (v[-1] - v[0]) / (len(v) - 1) if len(v) > 1 else 1.0
