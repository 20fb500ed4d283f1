"""SVG charts: observed vs predicted per run and per cell, and an RMSE summary bar chart.

Charts are written as plain SVG 1.1 text, so output bytes depend only on
the results and the plot configuration.
"""
import copy
import logging
import math
from html import escape
from itertools import groupby
from pathlib import Path

import numpy as np

from config import PLOT_CONFIG_FILE_NAME
from errors import DataError
from utils import load_config_file, write_text_file

log = logging.getLogger(__name__)

DEFAULT_PLOT_CONFIG = {
    "canvas": {"width": 640, "height": 360},
    "margins": {"left": 64, "right": 24, "top": 44, "bottom": 56},
    "colors": {
        "background": "#ffffff",
        "axis": "#333333",
        "grid": "#dddddd",
        "observed": "#1f77b4",
        "predicted": "#d62728",
        "bar": "#4c72b0",
        "bar_error": "#bbbbbb",
    },
    "fonts": {"family": "Helvetica, Arial, sans-serif", "size": 11, "title_size": 14},
    "strokes": {"line": 2.0, "overlay": 1.5, "axis": 1.0, "grid": 0.5},
    # one colour per model in the all-models chart, reused cyclically
    "palette": ["#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                "#8c564b", "#e377c2", "#7f7f7f", "#17becf"],
    "y_ticks": 5,
    "summary": {"bar_width": 14, "min_width": 640},
}


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_plot_config(path: str | Path | None = None) -> dict:
    """Plot styling from YAML merged over the defaults; missing file means defaults."""
    if path is None:
        path = Path(__file__).resolve().parent / PLOT_CONFIG_FILE_NAME
    data, _, exists, parsed = load_config_file(path)
    if exists and not parsed:
        log.warning("Ignoring unparsable plot config '%s'; using defaults.", path)
    return _merge(DEFAULT_PLOT_CONFIG, data or {})


class SVG:
    def __init__(self, width: int, height: int, background: str):
        self.width = width
        self.height = height
        self.svg = (
            '<?xml version="1.0" standalone="no"?>\n'
            '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" '
            '"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">\n'
            f'<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" '
            'xmlns="http://www.w3.org/2000/svg">\n'
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="{background}"/>\n'
        )

    def line(self, x1, y1, x2, y2, stroke, width, css_class=""):
        cls = f' class="{css_class}"' if css_class else ""
        self.svg += (f'<line{cls} x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                     f'stroke="{stroke}" stroke-width="{width}"/>\n')

    def polyline(self, points, stroke, width, css_class=""):
        cls = f' class="{css_class}"' if css_class else ""
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.svg += (f'<polyline{cls} points="{coords}" fill="none" stroke="{stroke}" '
                     f'stroke-width="{width}"/>\n')

    def circle(self, x, y, r, fill):
        self.svg += f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{fill}"/>\n'

    def filled_rectangle(self, x1, y1, x2, y2, fill, title=""):
        tip = f"<title>{escape(title)}</title>" if title else ""
        self.svg += (f'<rect x="{x1:.2f}" y="{y1:.2f}" width="{x2 - x1:.2f}" '
                     f'height="{y2 - y1:.2f}" fill="{fill}">{tip}</rect>\n')

    def text(self, x, y, string, size, family, anchor="middle", extra=""):
        self.svg += (f'<text x="{x:.2f}" y="{y:.2f}" font-family="{family}" font-size="{size}" '
                     f'text-anchor="{anchor}" {extra}>{escape(str(string))}</text>\n')

    def get_svg(self) -> str:
        return f"{self.svg}</svg>\n"


def _nice_range(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.08 * (hi - lo)
    return lo - pad, hi + pad


def _frame(cfg: dict) -> tuple[float, float, float, float]:
    w, h = cfg["canvas"]["width"], cfg["canvas"]["height"]
    m = cfg["margins"]
    return m["left"], m["top"], w - m["right"], h - m["bottom"]


def _y_axis(svg: SVG, cfg: dict, lo: float, hi: float, scale_y, label: str):
    left, top, right, bottom = _frame(cfg)
    colors, fonts, strokes = cfg["colors"], cfg["fonts"], cfg["strokes"]
    for value in np.linspace(lo, hi, int(cfg["y_ticks"])):
        y = scale_y(value)
        svg.line(left, y, right, y, colors["grid"], strokes["grid"], "ygrid")
        svg.text(left - 6, y + 4, f"{value:.2f}", fonts["size"], fonts["family"], anchor="end")
    svg.line(left, top, left, bottom, colors["axis"], strokes["axis"])
    svg.line(left, bottom, right, bottom, colors["axis"], strokes["axis"])
    svg.text(16, (top + bottom) / 2, label, fonts["size"], fonts["family"],
             extra=f'transform="rotate(-90 16 {(top + bottom) / 2:.2f})"')


def render_run_svg(result, observed: np.ndarray, cfg: dict) -> str:
    """Observed and predicted lines over the test window of one run."""
    years = [y for y, _, _ in result.per_year]
    predicted = np.array([p for _, _, p in result.per_year])
    left, top, right, bottom = _frame(cfg)
    colors, fonts, strokes = cfg["colors"], cfg["fonts"], cfg["strokes"]
    lo, hi = _nice_range(float(min(observed.min(), predicted.min())),
                         float(max(observed.max(), predicted.max())))

    def scale_x(i: int) -> float:
        return left + (right - left) * (i + 0.5) / len(years)

    def scale_y(v: float) -> float:
        return bottom - (bottom - top) * (v - lo) / (hi - lo)

    svg = SVG(cfg["canvas"]["width"], cfg["canvas"]["height"], colors["background"])
    title = f"{result.model} {result.run_key}: observed vs predicted"
    if result.metrics is not None:
        title += f" (RMSE {result.metrics.rmse:.3f})"
    svg.text((left + right) / 2, top - 18, title, fonts["title_size"], fonts["family"])
    _y_axis(svg, cfg, lo, hi, scale_y, "Anomaly (°C)")

    for i, year in enumerate(years):
        x = scale_x(i)
        svg.line(x, bottom, x, bottom + 5, colors["axis"], strokes["axis"], "xtick")
        svg.text(x, bottom + 18, year, fonts["size"], fonts["family"])
    svg.text((left + right) / 2, bottom + 40, "Year", fonts["size"], fonts["family"])

    for values, color, name in ((observed, colors["observed"], "observed"),
                                (predicted, colors["predicted"], "predicted")):
        points = [(scale_x(i), scale_y(v)) for i, v in enumerate(values)]
        svg.polyline(points, color, strokes["line"], name)
        for x, y in points:
            svg.circle(x, y, 2.5, color)

    legend_x = right - 150
    for row, (name, color) in enumerate((("Observed", colors["observed"]),
                                         ("Predicted", colors["predicted"]))):
        y = top + 12 + 16 * row
        svg.line(legend_x, y - 4, legend_x + 20, y - 4, color, strokes["line"], "legend")
        svg.text(legend_x + 26, y, name, fonts["size"], fonts["family"], anchor="start")
    return svg.get_svg()


def render_cell_svg(cell: str, runs: list, observed: np.ndarray, cfg: dict) -> str:
    """Observed values and every model's predictions for one (prep, test size) cell."""
    years = [y for y, _, _ in runs[0].per_year]
    lines = [(r.model, np.array([p for _, _, p in r.per_year]), r.metrics) for r in runs]
    left, top, right, bottom = _frame(cfg)
    colors, fonts, strokes = cfg["colors"], cfg["fonts"], cfg["strokes"]
    palette = cfg["palette"]
    lo = min(float(observed.min()), *(float(v.min()) for _, v, _ in lines))
    hi = max(float(observed.max()), *(float(v.max()) for _, v, _ in lines))
    lo, hi = _nice_range(lo, hi)

    def scale_x(i: int) -> float:
        return left + (right - left) * (i + 0.5) / len(years)

    def scale_y(v: float) -> float:
        return bottom - (bottom - top) * (v - lo) / (hi - lo)

    svg = SVG(cfg["canvas"]["width"], cfg["canvas"]["height"], colors["background"])
    svg.text((left + right) / 2, top - 18, f"{cell}: observed vs predicted, all models",
             fonts["title_size"], fonts["family"])
    _y_axis(svg, cfg, lo, hi, scale_y, "Anomaly (°C)")
    for i, year in enumerate(years):
        x = scale_x(i)
        svg.line(x, bottom, x, bottom + 5, colors["axis"], strokes["axis"], "xtick")
        svg.text(x, bottom + 18, year, fonts["size"], fonts["family"])
    svg.text((left + right) / 2, bottom + 40, "Year", fonts["size"], fonts["family"])

    legend = [("Observed", colors["observed"])]
    for n, (model, values, metrics) in enumerate(lines):
        color = palette[n % len(palette)]
        points = [(scale_x(i), scale_y(v)) for i, v in enumerate(values)]
        svg.polyline(points, color, strokes["overlay"], f"model {model}")
        label = model if metrics is None else f"{model} ({metrics.rmse:.3f})"
        legend.append((label, color))
    points = [(scale_x(i), scale_y(v)) for i, v in enumerate(observed)]
    svg.polyline(points, colors["observed"], strokes["line"], "observed")
    for x, y in points:
        svg.circle(x, y, 2.5, colors["observed"])

    legend_x = left + 8
    for row, (name, color) in enumerate(legend):
        y = top + 12 + 14 * row
        svg.line(legend_x, y - 4, legend_x + 20, y - 4, color, strokes["line"], "legend")
        svg.text(legend_x + 26, y, name, fonts["size"], fonts["family"], anchor="start")
    return svg.get_svg()


def render_summary_svg(results: list, cfg: dict) -> str:
    """Bar chart of test RMSE by run; failed runs get a grey stub."""
    colors, fonts, strokes = cfg["colors"], cfg["fonts"], cfg["strokes"]
    bar_w = cfg["summary"]["bar_width"]
    m = cfg["margins"]
    width = max(cfg["summary"]["min_width"], m["left"] + m["right"] + int(len(results) * bar_w * 1.5))
    height = cfg["canvas"]["height"] + 80
    frame_cfg = _merge(cfg, {"canvas": {"width": width, "height": height},
                             "margins": {"bottom": m["bottom"] + 80}})
    left, top, right, bottom = _frame(frame_cfg)

    finite = [r.metrics.rmse for r in results
              if r.metrics is not None and math.isfinite(r.metrics.rmse)]
    hi = max(finite) * 1.1 if finite and max(finite) > 0 else 1.0

    def scale_y(v: float) -> float:
        return bottom - (bottom - top) * v / hi

    svg = SVG(width, height, colors["background"])
    svg.text((left + right) / 2, top - 18, "Test RMSE by run", fonts["title_size"], fonts["family"])
    _y_axis(svg, frame_cfg, 0.0, hi, scale_y, "RMSE (°C)")
    step = (right - left) / len(results)
    for i, r in enumerate(results):
        x = left + step * i + (step - bar_w) / 2
        label = f"{r.model} {r.run_key}"
        if r.metrics is not None and math.isfinite(r.metrics.rmse):
            svg.filled_rectangle(x, scale_y(r.metrics.rmse), x + bar_w, bottom, colors["bar"],
                                 f"{label}: {r.metrics.rmse:.4f}")
        else:
            svg.filled_rectangle(x, bottom - 4, x + bar_w, bottom, colors["bar_error"],
                                 f"{label}: failed")
        cx = x + bar_w / 2
        svg.text(cx, bottom + 8, label, fonts["size"] - 2, fonts["family"], anchor="end",
                 extra=f'transform="rotate(-60 {cx:.2f} {bottom + 8:.2f})"')
    return svg.get_svg()


def render_plots(results: list, series, out_dir: str | Path, config_dict: dict | None = None) -> list[Path]:
    """Writes one SVG per successful run, one all-models SVG per (prep, test
    size) cell, then ``rmse_summary.svg``."""
    if not results:
        raise DataError("render_plots needs at least one result")
    cfg = _merge(DEFAULT_PLOT_CONFIG, config_dict or {})
    out = Path(out_dir)
    by_year = dict(zip((int(y) for y in series.years), (float(v) for v in series.values)))
    ordered = sorted(results, key=lambda r: (r.prep, r.test_size, r.model))

    def observed_for(r) -> np.ndarray:
        return np.array([by_year.get(int(y), o) for y, o, _ in r.per_year])

    written = []
    for r in ordered:
        if not r.per_year:
            log.warning("Skipping plot for %s: run has no predictions (%s).", r.cell, r.error)
            continue
        written.append(write_text_file(out / f"{r.cell}.svg", render_run_svg(r, observed_for(r), cfg)))
    for (prep, T), group in groupby(ordered, key=lambda r: (r.prep, r.test_size)):
        runs = [r for r in group if r.per_year]
        if not runs:
            continue
        cell = f"{prep}-T{T}"
        svg = render_cell_svg(cell, runs, observed_for(runs[0]), cfg)
        written.append(write_text_file(out / f"{cell}-all.svg", svg))
    written.append(write_text_file(out / "rmse_summary.svg", render_summary_svg(ordered, cfg)))
    log.info("Wrote %d SVG file(s) to %s.", len(written), out)
    return written
