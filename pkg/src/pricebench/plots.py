"""Static SVG emission for training curves and consumption snapshots.

Hand-rolled SVG keeps the byte output fully deterministic: no timestamps,
no generated ids, fixed float formatting. Numeric values are additionally
embedded as data-value attributes so plots can be cross-checked against the
CSV logs they were drawn from.
"""
from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

PANEL_W = 420
PANEL_H = 300
MARGIN_L = 62
MARGIN_R = 18
MARGIN_T = 34
MARGIN_B = 46


def _f(v: float) -> str:
    return format(float(v), ".2f")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


class Panel:
    """One axes rectangle with linear data-to-pixel mapping."""

    def __init__(self, x0: float, y0: float, xlim, ylim, title: str,
                 xlabel: str, ylabel: str):
        self.x0 = x0
        self.y0 = y0
        self.xlim = xlim
        self.ylim = ylim
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.parts: list[str] = []

    @property
    def plot_x(self):
        return self.x0 + MARGIN_L, self.x0 + PANEL_W - MARGIN_R

    @property
    def plot_y(self):
        return self.y0 + MARGIN_T, self.y0 + PANEL_H - MARGIN_B

    def px(self, x: float) -> float:
        lo, hi = self.xlim
        a, b = self.plot_x
        if hi == lo:
            return (a + b) / 2.0
        return a + (x - lo) / (hi - lo) * (b - a)

    def py(self, y: float) -> float:
        lo, hi = self.ylim
        a, b = self.plot_y
        if hi == lo:
            return (a + b) / 2.0
        return b - (y - lo) / (hi - lo) * (b - a)

    def polyline(self, xs, ys, color: str, cls: str, extra: str = "") -> None:
        pts = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, ys))
        self.parts.append(
            f'<polyline class="{cls}" fill="none" stroke="{color}" '
            f'stroke-width="1.5" points="{pts}"{extra}/>')

    def band(self, xs, lower, upper, color: str, cls: str) -> None:
        fwd = [f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, upper)]
        bwd = [f"{_f(self.px(x))},{_f(self.py(y))}"
               for x, y in zip(reversed(list(xs)), reversed(list(lower)))]
        self.parts.append(
            f'<polygon class="{cls}" fill="{color}" fill-opacity="0.18" '
            f'stroke="none" points="{" ".join(fwd + bwd)}"/>')

    def bar(self, x0: float, x1: float, y: float, color: str, attrs: str) -> None:
        base = self.py(max(self.ylim[0], 0.0))
        top = self.py(y)
        self.parts.append(
            f'<rect class="demand-bar" x="{_f(self.px(x0))}" y="{_f(min(top, base))}" '
            f'width="{_f(self.px(x1) - self.px(x0))}" '
            f'height="{_f(abs(base - top))}" fill="{color}"{attrs}/>')

    def render(self) -> str:
        ax_l, ax_r = self.plot_x
        ax_t, ax_b = self.plot_y
        bits = [f'<g class="panel">']
        bits.append(f'<rect x="{_f(ax_l)}" y="{_f(ax_t)}" width="{_f(ax_r - ax_l)}" '
                    f'height="{_f(ax_b - ax_t)}" fill="none" stroke="#333" '
                    'stroke-width="1"/>')
        for tx in _ticks(*self.xlim):
            px = self.px(tx)
            bits.append(f'<line x1="{_f(px)}" y1="{_f(ax_b)}" x2="{_f(px)}" '
                        f'y2="{_f(ax_b + 4)}" stroke="#333" stroke-width="1"/>')
            bits.append(f'<text x="{_f(px)}" y="{_f(ax_b + 16)}" font-size="10" '
                        f'text-anchor="middle">{format(tx, ".4g")}</text>')
        for ty in _ticks(*self.ylim):
            py = self.py(ty)
            bits.append(f'<line x1="{_f(ax_l - 4)}" y1="{_f(py)}" x2="{_f(ax_l)}" '
                        f'y2="{_f(py)}" stroke="#333" stroke-width="1"/>')
            bits.append(f'<text x="{_f(ax_l - 7)}" y="{_f(py + 3)}" font-size="10" '
                        f'text-anchor="end">{format(ty, ".4g")}</text>')
        bits.append(f'<text x="{_f((ax_l + ax_r) / 2)}" y="{_f(self.y0 + 16)}" '
                    f'font-size="12" text-anchor="middle" font-weight="bold">'
                    f'{self.title}</text>')
        bits.append(f'<text x="{_f((ax_l + ax_r) / 2)}" y="{_f(ax_b + 34)}" '
                    f'font-size="11" text-anchor="middle">{self.xlabel}</text>')
        bits.append(f'<text x="{_f(self.x0 + 14)}" y="{_f((ax_t + ax_b) / 2)}" '
                    f'font-size="11" text-anchor="middle" transform="rotate(-90 '
                    f'{_f(self.x0 + 14)} {_f((ax_t + ax_b) / 2)})">{self.ylabel}</text>')
        bits.extend(self.parts)
        bits.append("</g>")
        return "\n".join(bits)


def _svg(width: int, height: int, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    style = ('<rect x="0" y="0" width="100%" height="100%" fill="white"/>'
             '<g font-family="Helvetica,Arial,sans-serif" fill="#222">')
    return "\n".join([head, style] + body + ["</g>", "</svg>", ""])


def _range_with_pad(values, pad_frac: float = 0.06):
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return (0.0, 1.0)
    lo, hi = min(finite), max(finite)
    if hi == lo:
        pad = abs(hi) * pad_frac + 1e-6
    else:
        pad = (hi - lo) * pad_frac
    return lo - pad, hi + pad


def render_sweep_curves(curves: list[dict], bin_size: int) -> str:
    """Two-panel figure: binned energy reward and binned sample entropy per alpha.

    `curves` entries: {"alpha", "steps", "reward_mean", "reward_std",
    "entropy_mean", "entropy_std"}; shading spans one standard deviation.
    """
    panels = []
    specs = [
        ("(a) energy reward", "reward_mean", "reward_std", "mean reward per bin"),
        ("(b) sample entropy", "entropy_mean", "entropy_std", "summed hourly sample entropy"),
    ]
    for p_idx, (title, mean_key, std_key, ylabel) in enumerate(specs):
        all_x = [x for c in curves for x in c["steps"]]
        all_y = []
        for c in curves:
            for m, s in zip(c[mean_key], c[std_key]):
                if math.isfinite(m):
                    all_y.extend((m - s, m + s))
        panel = Panel(p_idx * PANEL_W, 0.0, _range_with_pad(all_x or [0.0]),
                      _range_with_pad(all_y), title, "training step", ylabel)
        for c_idx, c in enumerate(curves):
            color = PALETTE[c_idx % len(PALETTE)]
            xs, means, stds = [], [], []
            for x, m, s in zip(c["steps"], c[mean_key], c[std_key]):
                if math.isfinite(m):
                    xs.append(x)
                    means.append(m)
                    stds.append(s)
            if not xs:
                continue
            panel.band(xs, [m - s for m, s in zip(means, stds)],
                       [m + s for m, s in zip(means, stds)], color, "std-band")
            panel.polyline(xs, means, color, "mean-curve",
                           extra=f' data-alpha="{c["alpha"]!r}"')
        panels.append(panel)

    body = [p.render() for p in panels]
    for c_idx, c in enumerate(curves):
        color = PALETTE[c_idx % len(PALETTE)]
        lx = MARGIN_L + 10 + c_idx * 110
        body.append(f'<line x1="{_f(lx)}" y1="{_f(PANEL_H - 8)}" x2="{_f(lx + 22)}" '
                    f'y2="{_f(PANEL_H - 8)}" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{_f(lx + 27)}" y="{_f(PANEL_H - 4)}" font-size="11">'
                    f'alpha={c["alpha"]!r}</text>')
    return _svg(PANEL_W * 2, PANEL_H + 6, body)


def render_consumption(checkpoints: list[dict], grid) -> str:
    """Grouped demand bars at chosen steps with the grid price overlaid.

    `checkpoints` entries: {"step": int, "series": [{"label", "demand"}]}.
    Demand uses the left axis; the stepped grid line is scaled onto the same
    panel and labelled on the right.
    """
    grid = [float(g) for g in grid]
    n = len(checkpoints)
    ncols = min(2, n) if n else 1
    nrows = (n + ncols - 1) // ncols if n else 1

    all_demand = [v for cp in checkpoints for s in cp["series"] for v in s["demand"]]
    d_hi = max(all_demand + [1e-9]) * 1.15
    g_hi = max(grid) * 1.3

    body = []
    for i, cp in enumerate(checkpoints):
        row, col = divmod(i, ncols)
        panel = Panel(col * PANEL_W, row * PANEL_H, (0.5, 10.5), (0.0, d_hi),
                      f'step {cp["step"]}', "hour of day", "demand (kWh)")
        n_series = len(cp["series"])
        group_w = 0.8
        bar_w = group_w / max(1, n_series)
        for s_idx, series in enumerate(cp["series"]):
            color = PALETTE[s_idx % len(PALETTE)]
            for hour, val in enumerate(series["demand"], start=1):
                x0 = hour - group_w / 2 + s_idx * bar_w
                attrs = (f' data-step="{cp["step"]}" data-series="{series["label"]}"'
                         f' data-hour="{hour}" data-value="{val!r}"')
                panel.bar(x0, x0 + bar_w, float(val), color, attrs)
        # grid price rescaled onto the demand axis, drawn as a step line
        xs, ys = [], []
        for hour, g in enumerate(grid, start=1):
            y = g / g_hi * d_hi
            xs.extend((hour - 0.5, hour + 0.5))
            ys.extend((y, y))
        panel.polyline(xs, ys, "#444", "grid-price",
                       extra=f' stroke-dasharray="4,3" data-grid="{grid!r}"')
        ax_r = panel.plot_x[1]
        for g in _ticks(0.0, g_hi, 4):
            py = panel.py(g / g_hi * d_hi)
            body_tick = (f'<text x="{_f(ax_r + 4)}" y="{_f(py + 3)}" font-size="9" '
                         f'fill="#444">{format(g, ".3g")}</text>')
            panel.parts.append(body_tick)
        body.append(panel.render())

    for s_idx, series in enumerate(checkpoints[0]["series"] if checkpoints else []):
        color = PALETTE[s_idx % len(PALETTE)]
        lx = MARGIN_L + 10 + s_idx * 150
        ly = nrows * PANEL_H + 12
        body.append(f'<rect x="{_f(lx)}" y="{_f(ly - 9)}" width="12" height="9" '
                    f'fill="{color}"/>')
        body.append(f'<text x="{_f(lx + 17)}" y="{_f(ly)}" font-size="11">'
                    f'{series["label"]}</text>')
    return _svg(PANEL_W * ncols, PANEL_H * nrows + 22, body)
