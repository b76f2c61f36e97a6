"""CSV tables and static SVG figures.

All renderers return strings and depend only on their inputs, so identical
inputs give byte-identical files. Coordinates are written with two decimals.
"""

import csv
import io
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import RenderError
from .themes import SHORT_NAMES, THEMES

THEME_COLORS = {
    "Mitigation": "#1b9e77",
    "Adaptation": "#d95f02",
    "Disaster Risk Management": "#7570b3",
    "Loss and Damage": "#e7298a",
}
ROW_COLOR = "#1f4e9c"   # countries in the biplot
COL_COLOR = "#c0392b"   # themes in the biplot
NEUTRAL = "#9a9a9a"
INK = "#222222"
FONT = "font-family=\"Helvetica, Arial, sans-serif\""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    width: int = 640
    height: int = 480
    margin_top: int = 40
    margin_right: int = 30
    margin_bottom: int = 50
    margin_left: int = 70
    x_range: tuple | None = None
    y_range: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("pr_curve", "boxplots", "biplot", "coef_plot"):
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("figure dimensions must be positive")
        for rng in (self.x_range, self.y_range):
            if rng is not None and not rng[0] < rng[1]:
                raise ValueError(f"axis range {rng} must have low < high")

    @property
    def plot_box(self):
        return (self.margin_left, self.margin_top,
                self.width - self.margin_right, self.height - self.margin_bottom)


@dataclass(frozen=True)
class Axis:
    """Affine map between data values and pixel positions."""

    lo: float
    hi: float
    px_lo: float
    px_hi: float

    def to_px(self, v):
        return self.px_lo + (v - self.lo) * (self.px_hi - self.px_lo) / (self.hi - self.lo)

    def to_data(self, px):
        return self.lo + (px - self.px_lo) * (self.hi - self.lo) / (self.px_hi - self.px_lo)

    @property
    def data_per_px(self):
        return abs(self.hi - self.lo) / abs(self.px_hi - self.px_lo)


def _n(x):
    return f"{x:.2f}"


def _padded_range(lo, hi, pad=0.05):
    if not np.isfinite(lo) or not np.isfinite(hi):
        lo, hi = -1.0, 1.0
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt_tick(v):
    return f"{v:.2f}" if abs(v) < 100 else f"{v:.3g}"


class _Canvas:
    def __init__(self, width, height):
        self.width = width
        self.height = height
        self.parts = []

    def add(self, s):
        self.parts.append(s)

    def line(self, x1, y1, x2, y2, stroke=INK, width=1.0, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(f'<line x1="{_n(x1)}" y1="{_n(y1)}" x2="{_n(x2)}" y2="{_n(y2)}" '
                 f'stroke="{stroke}" stroke-width="{width}"{extra}/>')

    def rect(self, x, y, w, h, fill="none", stroke=INK, width=1.0):
        self.add(f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(w)}" height="{_n(h)}" '
                 f'fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>')

    def circle(self, cx, cy, r, fill=INK, stroke="none", cls=None):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<circle{c} cx="{_n(cx)}" cy="{_n(cy)}" r="{_n(r)}" fill="{fill}" stroke="{stroke}"/>')

    def polyline(self, pts, stroke, width=2.0):
        coords = " ".join(f"{_n(x)},{_n(y)}" for x, y in pts)
        self.add(f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def text(self, x, y, s, size=12, anchor="start", fill=INK, rotate=None, cls=None):
        tr = f' transform="rotate({rotate} {_n(x)} {_n(y)})"' if rotate is not None else ""
        c = f' class="{cls}"' if cls else ""
        self.add(f'<text{c} x="{_n(x)}" y="{_n(y)}" font-size="{size}" text-anchor="{anchor}" '
                 f'fill="{fill}" {FONT}{tr}>{escape(s)}</text>')

    def render(self, title):
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{self.width}" height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'<title>{escape(title)}</title>\n'
                f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _x_axis(cv, axis, y_px, label=None, ticks=None):
    cv.line(axis.px_lo, y_px, axis.px_hi, y_px)
    for v in ticks if ticks is not None else _ticks(axis.lo, axis.hi):
        x = axis.to_px(v)
        cv.line(x, y_px, x, y_px + 4)
        cv.text(x, y_px + 16, _fmt_tick(v), size=10, anchor="middle")
    if label:
        cv.text((axis.px_lo + axis.px_hi) / 2, y_px + 34, label, size=12, anchor="middle",
                cls="x-label")


def _y_axis(cv, axis, x_px, label=None, ticks=None):
    cv.line(x_px, axis.px_lo, x_px, axis.px_hi)
    for v in ticks if ticks is not None else _ticks(axis.lo, axis.hi):
        y = axis.to_px(v)
        cv.line(x_px - 4, y, x_px, y)
        cv.text(x_px - 6, y + 4, _fmt_tick(v), size=10, anchor="end")
    if label:
        mid = (axis.px_lo + axis.px_hi) / 2
        cv.text(x_px - 48, mid, label, size=12, anchor="middle", rotate=-90, cls="y-label")


# -- precision-recall ---------------------------------------------------------

def pr_polyline_points(curve):
    """Curve points as (recall, precision), starting at recall 0."""
    pts = [(0.0, float(curve.precision[0]))]
    pts += [(float(r), float(p)) for r, p in zip(curve.recall, curve.precision)]
    return pts


def render_pr_curves(curves, spec=None):
    """One precision-recall polyline per theme on the unit square.

    ``curves`` maps a theme (or any label) to a :class:`~policylens.metrics.PRCurve`.
    """
    spec = spec or FigureSpec("pr_curve")
    if not curves:
        raise RenderError("no precision-recall curves to render")
    x0, y0, x1, y1 = spec.plot_box
    xa = Axis(*(spec.x_range or (0.0, 1.0)), x0, x1)
    ya = Axis(*(spec.y_range or (0.0, 1.0)), y1, y0)
    cv = _Canvas(spec.width, spec.height)
    cv.rect(x0, y0, x1 - x0, y1 - y0, stroke="#dddddd")
    _x_axis(cv, xa, y1, "Recall")
    _y_axis(cv, ya, x0, "Precision")
    for i, (name, curve) in enumerate(curves.items()):
        color = THEME_COLORS.get(name, INK)
        cv.polyline([(xa.to_px(r), ya.to_px(p)) for r, p in pr_polyline_points(curve)], color)
        ly = y0 + 16 + 16 * i
        cv.line(x0 + 10, ly - 4, x0 + 30, ly - 4, stroke=color, width=2.0)
        cv.text(x0 + 36, ly, f"{name} (AP={curve.average_precision:.2f})", size=11, cls="legend")
    return cv.render("Precision-recall curves")


def pr_curves_csv(curves):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theme", "threshold", "precision", "recall", "average_precision"])
    for name, c in curves.items():
        for t, p, r in zip(c.thresholds, c.precision, c.recall):
            w.writerow([name, repr(float(t)), repr(float(p)), repr(float(r)),
                        repr(c.average_precision)])
    return buf.getvalue()


# -- faceted boxplots ---------------------------------------------------------

def render_boxplots(facets, spec=None):
    """Faceted horizontal boxplots, one facet per theme.

    ``facets`` is a sequence of ``(theme, entries)`` where ``entries`` lists
    ``(country_iso3, BoxStats)`` in rank order (rank 1 drawn at the top).
    All facets share one z-score axis.
    """
    facets = list(facets)
    if not facets:
        raise RenderError("no facets to render")
    spec = spec or FigureSpec("boxplots", width=720, height=220 * len(facets))
    values = [v for _, entries in facets for _, b in entries
              for v in (b.lower_whisker, b.upper_whisker, *b.outliers)]
    if spec.x_range:
        lo, hi = spec.x_range
    elif values:
        lo, hi = _padded_range(min(values), max(values))
    else:
        lo, hi = -1.0, 1.0
    x0, y0, x1, y1 = spec.plot_box
    xa = Axis(lo, hi, x0, x1)
    facet_h = (y1 - y0) / len(facets)
    cv = _Canvas(spec.width, spec.height)
    for f, (theme, entries) in enumerate(facets):
        top = y0 + f * facet_h
        bottom = top + facet_h - 24
        cv.text(x0, top + 12, theme, size=13, cls="facet-title")
        band_top = top + 18
        cv.rect(x0, band_top, x1 - x0, bottom - band_top, stroke="#dddddd")
        if not entries:
            cv.text((x0 + x1) / 2, (band_top + bottom) / 2, "no data", size=12, anchor="middle",
                    fill=NEUTRAL, cls="no-data")
            continue
        if lo < 0.0 < hi:
            cv.line(xa.to_px(0.0), band_top, xa.to_px(0.0), bottom, stroke="#cccccc", dash="3,3")
        row_h = (bottom - band_top) / len(entries)
        color = THEME_COLORS.get(theme, INK)
        for i, (country, b) in enumerate(entries):
            cy = band_top + (i + 0.5) * row_h
            hh = min(row_h * 0.35, 8.0)
            cv.text(x0 - 6, cy + 4, country, size=10, anchor="end", cls="country")
            cv.line(xa.to_px(b.lower_whisker), cy, xa.to_px(b.q1), cy)
            cv.line(xa.to_px(b.q3), cy, xa.to_px(b.upper_whisker), cy)
            cv.rect(xa.to_px(b.q1), cy - hh, xa.to_px(b.q3) - xa.to_px(b.q1), 2 * hh,
                    fill=color + "55", stroke=color)
            cv.line(xa.to_px(b.median), cy - hh, xa.to_px(b.median), cy + hh, stroke=INK, width=2.0)
            for o in b.outliers:
                cv.circle(xa.to_px(o), cy, 2.5, fill="none", stroke=INK, cls="outlier")
    _x_axis(cv, xa, y1, "Standardized policy count (z-score)")
    return cv.render("Top countries per policy theme")


def boxplot_csv(facets):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theme", "rank", "country_iso3", "lower_whisker", "q1", "median", "q3",
                "upper_whisker", "outliers"])
    for theme, entries in facets:
        for rank, (country, b) in enumerate(entries, start=1):
            w.writerow([theme, rank, country, repr(b.lower_whisker), repr(b.q1), repr(b.median),
                        repr(b.q3), repr(b.upper_whisker), " ".join(repr(o) for o in b.outliers)])
    return buf.getvalue()


# -- correspondence-analysis biplot ----------------------------------------------

def dimension_label(k, share):
    return f"Dim {k} ({100.0 * share:.1f}%)"


def render_biplot(ca, spec=None):
    """Symmetric CA map on dimensions 1 and 2: countries and themes together."""
    if ca.n_dims < 2:
        raise RenderError(
            f"biplot needs at least 2 CA dimensions, result has {ca.n_dims}; "
            "render a 1-D plot instead")
    spec = spec or FigureSpec("biplot", width=640, height=560)
    pts = np.vstack([ca.row_coords[:, :2], ca.column_coords[:, :2]])
    lim = float(np.abs(pts).max()) * 1.15 or 1.0
    x0, y0, x1, y1 = spec.plot_box
    xa = Axis(*(spec.x_range or (-lim, lim)), x0, x1)
    ya = Axis(*(spec.y_range or (-lim, lim)), y1, y0)
    cv = _Canvas(spec.width, spec.height)
    cv.rect(x0, y0, x1 - x0, y1 - y0, stroke="#dddddd")
    if xa.lo < 0 < xa.hi:
        cv.line(xa.to_px(0), y0, xa.to_px(0), y1, stroke="#cccccc", dash="3,3")
    if ya.lo < 0 < ya.hi:
        cv.line(x0, ya.to_px(0), x1, ya.to_px(0), stroke="#cccccc", dash="3,3")
    shares = ca.shares
    _x_axis(cv, xa, y1, dimension_label(1, shares[0]))
    _y_axis(cv, ya, x0, dimension_label(2, shares[1]))
    for label, (d1, d2) in zip(ca.row_labels, ca.row_coords[:, :2]):
        x, y = xa.to_px(d1), ya.to_px(d2)
        cv.circle(x, y, 3.0, fill=ROW_COLOR, cls="row-point")
        cv.text(x + 5, y - 4, label, size=9, fill=ROW_COLOR, cls="row-label")
    for label, (d1, d2) in zip(ca.column_labels, ca.column_coords[:, :2]):
        x, y = xa.to_px(d1), ya.to_px(d2)
        cv.add(f'<rect class="col-point" x="{_n(x - 4)}" y="{_n(y - 4)}" width="8.00" height="8.00" '
               f'fill="{COL_COLOR}"/>')
        cv.text(x + 7, y - 6, label, size=12, fill=COL_COLOR, cls="col-label")
    return cv.render("Correspondence analysis biplot")


def ca_coords_csv(ca):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "label"] + [f"dim{k + 1}" for k in range(ca.n_dims)])
    for label, coords in zip(ca.row_labels, ca.row_coords):
        w.writerow(["row", label] + [repr(float(v)) for v in coords])
    for label, coords in zip(ca.column_labels, ca.column_coords):
        w.writerow(["col", label] + [repr(float(v)) for v in coords])
    return buf.getvalue()


def ca_summary_csv(ca):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dim", "singular_value", "inertia", "share"])
    for k, (s, i, sh) in enumerate(zip(ca.singular_values, ca.inertia, ca.shares), start=1):
        w.writerow([k, repr(float(s)), repr(float(i)), repr(float(sh))])
    return buf.getvalue()


# -- coefficient plot -------------------------------------------------------------

def coef_axis(results, spec):
    lows = [c.ci_low for r in results for c in r.coefficients]
    highs = [c.ci_high for r in results for c in r.coefficients]
    if spec.x_range:
        lo, hi = spec.x_range
    else:
        lo, hi = _padded_range(min(lows + [0.0]), max(highs + [0.0]))
    x0, _, x1, _ = spec.plot_box
    return Axis(lo, hi, x0, x1)


def default_coef_spec(results):
    n_rows = sum(len(r.coefficients) for r in results)
    return FigureSpec("coef_plot", width=760, height=90 + 18 * n_rows + 22 * len(results),
                      margin_left=220)


def render_coef_plot(results, spec=None):
    """Dot-and-whisker plot: one row per (outcome, regressor), grouped by outcome."""
    results = list(results)
    if not results:
        raise RenderError("no regression results to plot")
    spec = spec or default_coef_spec(results)
    xa = coef_axis(results, spec)
    x0, y0, x1, y1 = spec.plot_box
    cv = _Canvas(spec.width, spec.height)
    rows = []
    for r in results:
        rows.append(("header", r.outcome, None))
        rows += [("coef", r.outcome, c) for c in r.coefficients]
    step = (y1 - y0) / len(rows)
    if xa.lo < 0.0 < xa.hi:
        cv.line(xa.to_px(0.0), y0, xa.to_px(0.0), y1, stroke=INK, dash="4,3")
    for i, (kind, outcome, c) in enumerate(rows):
        cy = y0 + (i + 0.5) * step
        if kind == "header":
            cv.text(x0 - 210, cy + 4, outcome, size=12, cls="outcome")
            continue
        color = THEME_COLORS.get(c.name, INK) if c.significant else NEUTRAL
        cv.text(x0 - 8, cy + 4, f"{SHORT_NAMES.get(c.name, c.name)} ({c.beta:.3g})",
                size=10, anchor="end", cls="coef-label")
        cv.line(xa.to_px(c.ci_low), cy, xa.to_px(c.ci_high), cy, stroke=color, width=2.0)
        cv.circle(xa.to_px(c.beta), cy, 3.5, fill=color, cls="coef-dot")
    conf = results[0].confidence
    _x_axis(cv, xa, y1, f"Estimated effect ({100 * conf:.0f}% CI)")
    return cv.render("Two-way fixed-effects estimates")


BATTERY_COLUMNS = ["outcome", "regressor", "beta", "se", "ci_low", "ci_high",
                   "n_obs", "n_countries", "n_years", "within_r2"]


def battery_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BATTERY_COLUMNS)
    for r in results:
        for c in r.coefficients:
            w.writerow([r.outcome, c.name, repr(c.beta), repr(c.se), repr(c.ci_low),
                        repr(c.ci_high), r.n_obs, r.n_countries, r.n_years, repr(r.within_r2)])
    return buf.getvalue()


# -- indicator tables -----------------------------------------------------------------

def indicators_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["country_iso3", "year", "theme", "count", "zscore"])
    for c, y, theme, count, z in rows:
        w.writerow([c, y, theme, count, repr(float(z))])
    return buf.getvalue()


def rankings_csv(rankings):
    """``rankings`` maps theme -> list of RankedCountry in rank order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theme", "rank", "country_iso3", "mean_z"])
    for theme in THEMES:
        for rank, rc in enumerate(rankings.get(theme, []), start=1):
            w.writerow([theme, rank, rc.country_iso3, repr(rc.mean_z)])
    return buf.getvalue()

