import xml.etree.ElementTree as ET

import numpy as np
import pytest

from policylens.ca import correspondence_analysis
from policylens.exceptions import RenderError
from policylens.indicators import box_stats
from policylens.metrics import pr_curve
from policylens.panel import Coefficient, FEResult
from policylens.report import (NEUTRAL, THEME_COLORS, Axis, FigureSpec, battery_csv, ca_summary_csv,
                               coef_axis, default_coef_spec, dimension_label, render_biplot,
                               render_boxplots, render_coef_plot, render_pr_curves)

SVG = "{http://www.w3.org/2000/svg}"


def parse(svg):
    return ET.fromstring(svg)


def by_class(root, cls):
    return [e for e in root.iter() if e.get("class") == cls]


def test_axis_round_trip():
    ax = Axis(-2.0, 3.0, 70.0, 610.0)
    for v in (-2.0, 0.0, 1.234, 3.0):
        assert ax.to_data(ax.to_px(v)) == pytest.approx(v, abs=1e-12)
    assert ax.to_px(-2.0) == 70.0 and ax.to_px(3.0) == 610.0


def test_figure_spec_validation():
    with pytest.raises(ValueError):
        FigureSpec("pie")
    with pytest.raises(ValueError):
        FigureSpec("biplot", x_range=(1.0, 1.0))


def _curves():
    return {"Mitigation": pr_curve([0.9, 0.8, 0.3], [1, 1, 0]),
            "Adaptation": pr_curve([0.9, 0.8, 0.1], [1, 0, 1])}


def test_pr_legend_and_determinism():
    svg = render_pr_curves(_curves())
    assert svg == render_pr_curves(_curves())
    legends = [e.text for e in by_class(parse(svg), "legend")]
    assert legends == ["Mitigation (AP=1.00)", "Adaptation (AP=0.83)"]


def test_dimension_label():
    assert dimension_label(1, 0.717) == "Dim 1 (71.7%)"
    assert dimension_label(2, 0.2043) == "Dim 2 (20.4%)"


def test_biplot_axis_labels_match_shares():
    N = np.array([[20, 5, 3, 2], [4, 15, 6, 1], [3, 3, 12, 8], [9, 2, 2, 10]], float)
    ca = correspondence_analysis(N)
    texts = [e.text for e in parse(render_biplot(ca)).iter(SVG + "text")]
    for k in (1, 2):
        assert dimension_label(k, ca.shares[k - 1]) in texts
    assert len(ca_summary_csv(ca).strip().splitlines()) == 1 + ca.n_dims


def test_biplot_needs_two_dims():
    with pytest.raises(RenderError, match="2 CA dimensions"):
        render_biplot(correspondence_analysis(np.array([[10, 0], [0, 10]])))


def test_boxplot_placeholder_for_empty_facet():
    facets = [("Mitigation", [("DEU", box_stats([1, 2, 3, 4, 100]))]), ("Loss and Damage", [])]
    root = parse(render_boxplots(facets))
    assert [e.text for e in by_class(root, "no-data")] == ["no data"]
    assert len(by_class(root, "outlier")) == 1


def _result(outcome, coefs):
    return FEResult(outcome=outcome, coefficients=tuple(coefs), n_obs=40, n_countries=10,
                    n_years=4, iterations=3, within_r2=0.5, confidence=0.95)


RESULTS = [
    _result("GDP", [Coefficient("Mitigation", 0.038, 0.01, 0.018, 0.058),
                    Coefficient("Adaptation", -0.2, 0.3, -0.8, 0.4)]),
    _result("FDI", [Coefficient("Disaster Risk Management", -1.5, 0.5, -2.5, -0.5),
                    Coefficient("Loss and Damage", 3.0, 2.0, -1.0, 7.0)]),
]


def test_coef_dots_invert_to_beta():
    svg = render_coef_plot(RESULTS)
    ax = coef_axis(RESULTS, default_coef_spec(RESULTS))
    dots = by_class(parse(svg), "coef-dot")
    betas = [c.beta for r in RESULTS for c in r.coefficients]
    assert len(dots) == len(betas)
    for dot, beta in zip(dots, betas):
        # 2-decimal pixel rounding bounds the error
        assert abs(ax.to_data(float(dot.get("cx"))) - beta) <= 0.005 * ax.data_per_px + 1e-12


def test_coef_significance_colors():
    dots = by_class(parse(render_coef_plot(RESULTS)), "coef-dot")
    fills = [d.get("fill") for d in dots]
    assert fills == [THEME_COLORS["Mitigation"], NEUTRAL,
                     THEME_COLORS["Disaster Risk Management"], NEUTRAL]


def test_coef_plot_empty():
    with pytest.raises(RenderError):
        render_coef_plot([])


def test_battery_csv_rows():
    lines = battery_csv(RESULTS).strip().splitlines()
    assert lines[0].startswith("outcome,regressor,beta,se,ci_low,ci_high")
    assert len(lines) == 5
    assert lines[1].startswith("GDP,Mitigation,0.038,")
