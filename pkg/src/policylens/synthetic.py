"""Synthetic corpora and indicator tables for tests, demos and fixtures.

The policy corpus is keyword-planted: every theme owns a disjoint pool of
words and a document's text mixes the pools of its gold themes with shared
filler vocabulary, so the themes are linearly separable in tf-idf space.
"""

import numpy as np

from .indicators import theme_counts
from .ingest import DEFAULT_TRANSFORMS, LOG, IndicatorObservation, PolicyDocument
from .themes import THEMES

KEYWORDS = {
    "Mitigation": ["emission", "emissions", "carbon", "greenhouse", "renewable", "solar",
                   "decarbonisation", "methane", "netzero", "biofuel"],
    "Adaptation": ["adaptation", "drought", "irrigation", "coastal", "heatwave",
                   "watershed", "agroforestry", "mangrove", "salinity", "reforestation"],
    "Disaster Risk Management": ["disaster", "flood", "hurricane", "evacuation", "earlywarning",
                                 "preparedness", "cyclone", "landslide", "contingency", "shelter"],
    "Loss and Damage": ["loss", "damage", "compensation", "relocation", "insurance",
                        "solidarity", "displacement", "rehabilitation", "indemnity", "reparation"],
}

FILLER = ["national", "policy", "law", "government", "framework", "ministry", "strategy",
          "plan", "implementation", "sector", "programme", "development", "act", "decree",
          "regulation", "committee", "annual", "report", "objectives", "measures",
          "política", "nacional", "loi", "cadre", "gesetz", "entwicklung"]

G7 = ("CAN", "DEU", "FRA", "GBR", "ITA", "JPN", "USA")
OTHER_COUNTRIES = ("BGD", "BOL", "BRA", "CHN", "FJI", "IND", "JAM", "KEN", "MDV",
                   "MEX", "PHL", "SOM", "SYC", "TUV", "VNM", "ZAF")

# overall theme prevalence as the first label of a document
BASE_THEME_WEIGHTS = np.array([0.5, 0.28, 0.14, 0.08])


def _country_profiles(countries, rng):
    # per-country theme emphasis so that the country x theme table has structure
    return {c: rng.dirichlet(BASE_THEME_WEIGHTS * 8.0) for c in countries}


def make_document_text(themes, rng, n_keywords=(6, 6), n_filler=(2, 4)):
    words = []
    for theme in themes:
        pool = KEYWORDS[theme]
        words += list(rng.choice(pool, size=rng.integers(*n_keywords, endpoint=True)))
    words += list(rng.choice(FILLER, size=rng.integers(*n_filler, endpoint=True)))
    words = [str(w) for w in rng.permutation(words)]
    return " ".join(words).capitalize() + "."


def make_policy_corpus(n_docs=400, countries=G7 + OTHER_COUNTRIES, years=range(2013, 2023),
                       second_label_prob=0.25, unlabeled_frac=0.0, seed=0):
    """Generate a keyword-planted multi-label corpus.

    Each document draws a primary theme from its country's emphasis profile
    and, with probability ``second_label_prob``, a distinct second theme.
    A fraction ``unlabeled_frac`` of documents keeps its planted text but an
    empty gold label set.

    Returns the documents and, aligned with them, the planted label sets.
    """
    rng = np.random.default_rng(seed)
    countries = list(countries)
    years = list(years)
    profiles = _country_profiles(countries, rng)
    docs = []
    for i in range(n_docs):
        country = countries[rng.integers(len(countries))]
        year = years[rng.integers(len(years))]
        first = rng.choice(len(THEMES), p=profiles[country])
        labels = {THEMES[first]}
        if rng.random() < second_label_prob:
            others = [k for k in range(len(THEMES)) if k != first]
            labels.add(THEMES[others[rng.integers(len(others))]])
        ordered = [t for t in THEMES if t in labels]
        text = make_document_text(ordered, rng)
        gold = frozenset() if rng.random() < unlabeled_frac else frozenset(labels)
        planted = frozenset(labels)
        docs.append((PolicyDocument(doc_id=f"D{i + 1:05d}", country_iso3=country, year=year,
                                    summary_text=text, gold_labels=gold), planted))
    return [d for d, _ in docs], [p for _, p in docs]


# plausible magnitudes (raw units) for each indicator
INDICATOR_SCALES = {
    "GDP": 5e11, "GNI_ATLAS": 4.5e11, "GNI_PPP": 8e11, "FDI": 1e10,
    "EXT_DEBT": 1e11, "ELEC_CONS": 3000.0, "ADOL_FERT": 40.0, "SEC_ENROLL": 85.0,
}


def make_wdi_table(docs, years=range(2013, 2023), codes=tuple(DEFAULT_TRANSFORMS),
                   effects=None, noise=0.05, missing_frac=0.15, seed=1):
    """Indicator observations generated from a two-way fixed-effects model.

    On the model scale (log for LOG indicators, relative level otherwise) each
    outcome is ``alpha_country + gamma_year + counts @ beta + noise``; the
    counts are the gold theme counts of ``docs``. ``effects`` maps indicator
    code to a length-4 coefficient vector. Cells are deleted at random with
    probability ``missing_frac``.
    """
    rng = np.random.default_rng(seed)
    panel = theme_counts(docs, source="gold")
    countries = sorted({d.country_iso3 for d in docs})
    years = list(years)
    if effects is None:
        effects = {code: rng.normal(0, 0.05, size=len(THEMES)) for code in codes}
    out = []
    for code in codes:
        beta = np.asarray(effects[code], dtype=float)
        alpha = {c: rng.normal(0, 1.0) for c in countries}
        gamma = {y: 0.02 * (y - years[0]) + rng.normal(0, 0.05) for y in years}
        for c in countries:
            for y in years:
                counts = np.array(panel.counts.get((c, y), (0,) * len(THEMES)), dtype=float)
                eta = alpha[c] + gamma[y] + counts @ beta + rng.normal(0, noise)
                if rng.random() < missing_frac:
                    continue
                scale = INDICATOR_SCALES.get(code, 1.0)
                if DEFAULT_TRANSFORMS.get(code) == LOG:
                    value = scale * float(np.exp(eta))
                else:
                    value = scale * float(1.0 + eta)
                out.append(IndicatorObservation(c, y, code, float(f"{value:.6g}")))
    return out


# coefficient vectors (Mitigation, Adaptation, DRM, Loss and Damage) used for
# the shipped fixture
FIXTURE_EFFECTS = {
    "GDP": [0.04, 0.0, 0.01, 0.0],
    "GNI_ATLAS": [0.035, 0.0, 0.0, 0.0],
    "GNI_PPP": [0.03, 0.0, 0.02, 0.0],
    "FDI": [0.0, 0.0, -0.05, 0.0],
    "EXT_DEBT": [0.03, 0.0, 0.02, 0.0],
    "ELEC_CONS": [0.0, -0.02, 0.0, 0.0],
    "ADOL_FERT": [0.01, 0.0, 0.0, 0.0],
    "SEC_ENROLL": [-0.01, 0.0, 0.0, 0.0],
}


def write_fixture_set(directory):
    """Write ``policies.csv`` and ``wdi.csv`` as shipped in ``policylens/data/fixtures``.

    A fifth of the documents are unlabelled. Outcomes are generated from the
    planted labels of every document, labelled or not.
    """
    from dataclasses import replace
    from pathlib import Path

    from .ingest import write_policy_corpus, write_wdi_table

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    docs, planted = make_policy_corpus(n_docs=360, unlabeled_frac=0.2, seed=7)
    truth = [replace(d, gold_labels=p) for d, p in zip(docs, planted)]
    write_policy_corpus(docs, directory / "policies.csv")
    write_wdi_table(make_wdi_table(truth, effects=FIXTURE_EFFECTS, seed=11), directory / "wdi.csv")
