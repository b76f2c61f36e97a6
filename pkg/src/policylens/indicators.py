"""Country-year theme counts, pooled z-scores, rankings and box statistics."""

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .themes import THEMES


@dataclass
class ThemePanel:
    """Policy counts per (country_iso3, year), one integer per theme."""

    counts: dict

    def __len__(self):
        return len(self.counts)

    def keys(self):
        return sorted(self.counts)

    def countries(self):
        return sorted({c for c, _ in self.counts})

    def spans(self):
        """First and last observed year for every country."""
        spans = {}
        for c, y in self.counts:
            lo, hi = spans.get(c, (y, y))
            spans[c] = (min(lo, y), max(hi, y))
        return spans

    def series(self, theme):
        """``(keys, values)`` for one theme in sorted key order."""
        k = THEMES.index(theme)
        keys = self.keys()
        return keys, np.array([self.counts[key][k] for key in keys], dtype=float)

    def filter_years(self, min_year):
        return ThemePanel({key: v for key, v in self.counts.items() if key[1] >= min_year})


def theme_counts(docs, source="auto"):
    """Aggregate labelled documents into a :class:`ThemePanel`.

    A document with several labels counts once towards each of them.
    """
    acc = defaultdict(lambda: [0] * len(THEMES))
    for d in docs:
        row = acc[(d.country_iso3, d.year)]
        labels = d.labels(source)
        for k, theme in enumerate(THEMES):
            if theme in labels:
                row[k] += 1
    return ThemePanel({key: tuple(v) for key, v in acc.items()})


def zscore(values):
    """Standardize with the sample standard deviation (``ddof=1``).

    Series of length one or with zero spread map to all zeros.
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("zscore of an empty series")
    if x.size == 1:
        return np.zeros(1)
    # test the spread directly: std of a constant non-integer series is ~1e-15, not 0
    if np.ptp(x) == 0:
        return np.zeros_like(x)
    return (x - x.mean()) / x.std(ddof=1)


@dataclass(frozen=True)
class RankedCountry:
    country_iso3: str
    mean_z: float
    years: tuple
    z: tuple


def standardized_long(panel):
    """Rows ``(country, year, theme, count, z)`` with z pooled per theme."""
    rows = []
    if not len(panel):
        return rows
    for theme in THEMES:
        keys, values = panel.series(theme)
        for (c, y), v, z in zip(keys, values, zscore(values)):
            rows.append((c, y, theme, int(v), float(z)))
    rows.sort(key=lambda r: (r[0], r[1], THEMES.index(r[2])))
    return rows


def top_countries(panel, theme, k=10):
    """Rank countries by the mean of their pooled z-scores for ``theme``.

    Z-scores are computed across every country-year in ``panel``; each
    country's mean over its observed years decides the order (descending,
    ties by ISO3). Returns at most ``k`` :class:`RankedCountry` entries.
    """
    if not len(panel):
        return []
    keys, values = panel.series(theme)
    z = zscore(values)
    by_country = defaultdict(list)
    for (c, y), zi in zip(keys, z):
        by_country[c].append((y, float(zi)))
    ranked = []
    for c, pairs in by_country.items():
        years, zs = zip(*pairs)
        ranked.append(RankedCountry(c, float(np.mean(zs)), years, zs))
    ranked.sort(key=lambda r: (-r.mean_z, r.country_iso3))
    return ranked[:k]


@dataclass(frozen=True)
class BoxStats:
    median: float
    q1: float
    q3: float
    lower_whisker: float
    upper_whisker: float
    outliers: tuple

    @property
    def iqr(self):
        return self.q3 - self.q1


def box_stats(values):
    """Tukey box-plot statistics with type-7 (linear) quartiles."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("box_stats of an empty series")
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    outliers = tuple(float(v) for v in x[(x < lo_fence) | (x > hi_fence)])
    return BoxStats(median=float(med), q1=float(q1), q3=float(q3),
                    lower_whisker=float(inside.min()), upper_whisker=float(inside.max()),
                    outliers=outliers)
