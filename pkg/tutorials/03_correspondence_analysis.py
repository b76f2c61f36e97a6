"""
Correspondence analysis of countries and themes
===============================================

Pool the theme counts over years into a country x theme table and map rows
and columns into a shared low-dimensional space.
"""

# %%
import numpy as np

from policylens.ca import contingency_from_panel, correspondence_analysis
from policylens.indicators import theme_counts
from policylens.report import render_biplot
from policylens.synthetic import make_policy_corpus

docs, _ = make_policy_corpus(n_docs=600, seed=5)
table = contingency_from_panel(theme_counts(docs, source="gold"), top_n=12)
print(table.rows)
print(table.counts.astype(int))

# %%
# Total inertia equals the chi-square statistic divided by the grand total.
ca = correspondence_analysis(table)
N = table.counts
E = np.outer(N.sum(1), N.sum(0)) / N.sum()
print(f"total inertia {ca.total_inertia:.6f}  chi2/n {((N - E) ** 2 / E).sum() / N.sum():.6f}")
for k, share in enumerate(ca.shares, start=1):
    print(f"Dim {k}: {100 * share:.1f}% of inertia")

# %%
# Theme positions in principal coordinates.
for label, coords in zip(ca.column_labels, ca.column_coords):
    print(f"{label:<26} {coords[0]:+.3f} {coords[1]:+.3f}")

# %%
# The biplot is a plain SVG string.
import tempfile
from pathlib import Path

out = Path(tempfile.mkdtemp()) / "biplot.svg"
out.write_text(render_biplot(ca))
print(f"wrote {out}")
