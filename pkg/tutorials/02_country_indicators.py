"""
Country-year theme indicators
=============================

Count policies per country, year and theme, standardize each theme's counts
across all country-years and rank countries by their mean z-score.
"""

# %%
from policylens.indicators import box_stats, theme_counts, top_countries, zscore
from policylens.synthetic import make_policy_corpus

docs, _ = make_policy_corpus(n_docs=400, seed=3)
panel = theme_counts(docs, source="gold").filter_years(2015)
print(f"{len(panel)} country-years, {len(panel.countries())} countries")

# %%
# z-scores use the sample standard deviation. A constant series maps to zeros.
print(zscore([2, 4, 4, 4, 5, 5, 7, 9]).round(5))
print(zscore([3, 3, 3]))

# %%
# Top five countries for Adaptation and the spread of their yearly z-scores.
for rc in top_countries(panel, "Adaptation", k=5):
    b = box_stats(rc.z)
    print(f"{rc.country_iso3}  mean z {rc.mean_z:+.3f}  median {b.median:+.3f}  "
          f"IQR {b.iqr:.3f}  outliers {len(b.outliers)}")

# %%
# Whiskers stop at the last point inside 1.5 IQR of the quartiles.
b = box_stats([1, 2, 3, 4, 100])
print(b)
