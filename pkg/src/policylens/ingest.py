"""Loading, validating, harmonizing and merging the input tables.

Two CSV inputs feed the pipeline: a policy corpus (one summary per row,
pipe-separated theme labels) and a long-format development-indicator table
(one row per country, year and indicator). ``harmonize`` applies the
per-indicator log/level transform and the minimum-year filter, and
``merge_policy_and_wdi`` outer-joins the result with the country-year theme
counts. Missing cells stay missing throughout; nothing is imputed.
"""

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DuplicateKeyError, RowError, SchemaError
from .themes import THEMES, format_labels, parse_labels

ISO3_RE = re.compile(r"[A-Z]{3}")
MIN_VALID_YEAR = 1900

POLICY_COLUMNS = ("doc_id", "country_iso3", "year", "summary_text", "labels")
PREDICTED_COLUMN = "predicted_labels"
WDI_COLUMNS = ("country_iso3", "year", "indicator_code", "value")

LOG = "LOG"
LEVEL = "LEVEL"

# FDI can be negative, so it stays in levels by default.
DEFAULT_TRANSFORMS = {
    "GDP": LOG,
    "GNI_ATLAS": LOG,
    "GNI_PPP": LOG,
    "FDI": LEVEL,
    "EXT_DEBT": LOG,
    "ELEC_CONS": LOG,
    "ADOL_FERT": LEVEL,
    "SEC_ENROLL": LEVEL,
}
DEFAULT_MIN_YEAR = 2015


@dataclass(frozen=True)
class PolicyDocument:
    doc_id: str
    country_iso3: str
    year: int
    summary_text: str
    gold_labels: frozenset = frozenset()
    predicted_labels: frozenset | None = None

    def labels(self, source="auto"):
        """Label set used for aggregation.

        ``source`` is ``"gold"``, ``"predicted"`` or ``"auto"`` (predicted
        when available, gold otherwise).
        """
        if source == "gold":
            return self.gold_labels
        if source == "predicted":
            if self.predicted_labels is None:
                raise ValueError(f"document {self.doc_id} has no predicted labels")
            return self.predicted_labels
        return self.gold_labels if self.predicted_labels is None else self.predicted_labels


@dataclass(frozen=True)
class IndicatorObservation:
    country_iso3: str
    year: int
    indicator_code: str
    value: float


@dataclass(frozen=True)
class HarmonizeConfig:
    transforms: dict = field(default_factory=lambda: dict(DEFAULT_TRANSFORMS))
    min_year: int = DEFAULT_MIN_YEAR


@dataclass(frozen=True)
class HarmonizedRow:
    country_iso3: str
    year: int
    indicator_code: str
    value: float


@dataclass
class HarmonizedPanel:
    """Transformed indicator rows plus the bookkeeping of what was dropped.

    ``drops`` maps indicator code to ``{"year_filter": n, "nonpositive_log": m}``.
    """

    rows: list
    transforms: dict
    min_year: int
    drops: dict

    @property
    def n_dropped(self):
        return sum(sum(d.values()) for d in self.drops.values())


@dataclass
class AnalysisPanel:
    """Country-year rows with theme counts and outcome indicators.

    Both ``counts`` (shape ``(n, 4)``) and every array in ``indicators`` use
    NaN for missing cells.
    """

    keys: list
    counts: np.ndarray
    indicators: dict

    def __len__(self):
        return len(self.keys)

    def column(self, name):
        if name in THEMES:
            return self.counts[:, THEMES.index(name)]
        try:
            return self.indicators[name]
        except KeyError:
            raise KeyError(f"panel has no column {name!r}") from None


def _check_header(fieldnames, required, path):
    if fieldnames is None:
        raise SchemaError(f"{path}: empty file, expected header {','.join(required)}")
    missing = [c for c in required if c not in fieldnames]
    if missing:
        raise SchemaError(f"{path}: header is missing column(s): {', '.join(missing)}")


def _parse_iso3(raw, line):
    code = raw.strip()
    if not ISO3_RE.fullmatch(code):
        raise RowError(line, f"invalid ISO3 code {raw!r}")
    return code


def _parse_year(raw, line):
    try:
        year = int(raw.strip())
    except ValueError:
        raise RowError(line, f"year is not an integer: {raw!r}") from None
    if year < MIN_VALID_YEAR:
        raise RowError(line, f"year {year} is before {MIN_VALID_YEAR}")
    return year


def load_policy_corpus(path):
    """Read a policy corpus CSV into a list of :class:`PolicyDocument`.

    The optional ``predicted_labels`` column, written by the classifier, is
    carried through when present.
    """
    path = Path(path)
    docs = []
    seen = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, POLICY_COLUMNS, path)
        has_pred = PREDICTED_COLUMN in reader.fieldnames
        for row in reader:
            line = reader.line_num
            if None in row.values():
                raise RowError(line, "too few fields")
            doc_id = row["doc_id"].strip()
            if not doc_id:
                raise RowError(line, "empty doc_id")
            if doc_id in seen:
                raise DuplicateKeyError(
                    f"{path}: duplicate doc_id {doc_id!r} on lines {seen[doc_id]} and {line}")
            seen[doc_id] = line
            text = row["summary_text"]
            if not text.strip():
                raise RowError(line, "summary_text is empty")
            try:
                gold = parse_labels(row["labels"])
                pred = parse_labels(row[PREDICTED_COLUMN]) if has_pred else None
            except ValueError as exc:
                raise RowError(line, str(exc)) from None
            docs.append(PolicyDocument(
                doc_id=doc_id,
                country_iso3=_parse_iso3(row["country_iso3"], line),
                year=_parse_year(row["year"], line),
                summary_text=text,
                gold_labels=gold,
                predicted_labels=pred,
            ))
    return docs


def format_policy_corpus(docs, with_predictions=False):
    """Serialize documents to CSV text in the corpus schema."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(POLICY_COLUMNS + ((PREDICTED_COLUMN,) if with_predictions else ()))
    for d in docs:
        row = [d.doc_id, d.country_iso3, d.year, d.summary_text, format_labels(d.gold_labels)]
        if with_predictions:
            row.append(format_labels(d.predicted_labels or ()))
        writer.writerow(row)
    return buf.getvalue()


def write_policy_corpus(docs, path, with_predictions=False):
    Path(path).write_text(format_policy_corpus(docs, with_predictions), encoding="utf-8",
                          newline="")


def load_wdi_table(path):
    """Read a long-format indicator CSV.

    Blank value cells are missing data and produce no observation.
    """
    path = Path(path)
    out = []
    seen = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, WDI_COLUMNS, path)
        for row in reader:
            line = reader.line_num
            if None in row.values():
                raise RowError(line, "too few fields")
            iso3 = _parse_iso3(row["country_iso3"], line)
            year = _parse_year(row["year"], line)
            code = row["indicator_code"].strip()
            if not code:
                raise RowError(line, "empty indicator_code")
            raw = row["value"].strip()
            if not raw:
                continue
            try:
                value = float(raw)
            except ValueError:
                raise RowError(line, f"value is not numeric: {raw!r}") from None
            if not math.isfinite(value):
                raise RowError(line, f"value is not finite: {raw!r}")
            key = (iso3, year, code)
            if key in seen:
                raise DuplicateKeyError(
                    f"{path}: duplicate key {key} on lines {seen[key]} and {line}")
            seen[key] = line
            out.append(IndicatorObservation(iso3, year, code, value))
    return out


def format_wdi_table(observations):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(WDI_COLUMNS)
    for o in observations:
        writer.writerow([o.country_iso3, o.year, o.indicator_code, repr(o.value)])
    return buf.getvalue()


def write_wdi_table(observations, path):
    Path(path).write_text(format_wdi_table(observations), encoding="utf-8", newline="")


def parse_harmonize_config(text, source="<config>"):
    """Parse ``indicator_code = LOG|LEVEL`` lines and an optional ``min_year``.

    Blank lines and ``#`` comments are ignored. Codes not mentioned get no
    transform, so :func:`harmonize` rejects them.
    """
    transforms = {}
    min_year = DEFAULT_MIN_YEAR
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key == "min_year":
            try:
                min_year = int(value)
            except ValueError:
                raise ConfigError(f"{source}:{lineno}: min_year must be an integer") from None
            continue
        value = value.upper()
        if value not in (LOG, LEVEL):
            raise ConfigError(f"{source}:{lineno}: transform for {key} must be LOG or LEVEL")
        if key in transforms:
            raise ConfigError(f"{source}:{lineno}: {key} configured twice")
        transforms[key] = value
    return HarmonizeConfig(transforms=transforms, min_year=min_year)


def load_harmonize_config(path):
    path = Path(path)
    return parse_harmonize_config(path.read_text(encoding="utf-8"), source=str(path))


def format_harmonize_config(config):
    lines = [f"min_year = {config.min_year}"]
    lines += [f"{code} = {tr}" for code, tr in config.transforms.items()]
    return "\n".join(lines) + "\n"


def harmonize(observations, config=None):
    """Apply the year filter and per-indicator transforms.

    Rows before ``config.min_year`` are dropped first; surviving LOG rows with
    a non-positive value are dropped next. Both are tallied per indicator in
    ``HarmonizedPanel.drops`` so that input = output + drops.
    """
    config = config or HarmonizeConfig()
    unknown = sorted({o.indicator_code for o in observations} - set(config.transforms))
    if unknown:
        raise ConfigError(f"no transform configured for indicator(s): {', '.join(unknown)}")

    drops = {code: {"year_filter": 0, "nonpositive_log": 0}
             for code in sorted({o.indicator_code for o in observations})}
    rows = []
    for o in observations:
        if o.year < config.min_year:
            drops[o.indicator_code]["year_filter"] += 1
            continue
        if config.transforms[o.indicator_code] == LOG:
            if o.value <= 0:
                drops[o.indicator_code]["nonpositive_log"] += 1
                continue
            value = math.log(o.value)
        else:
            value = o.value
        rows.append(HarmonizedRow(o.country_iso3, o.year, o.indicator_code, value))
    return HarmonizedPanel(rows=rows, transforms=dict(config.transforms),
                           min_year=config.min_year, drops=drops)


def merge_policy_and_wdi(theme_panel, harmonized):
    """Full outer join of theme counts and harmonized indicators.

    Theme counts for a country-year missing from ``theme_panel`` are 0 when
    the year lies inside that country's observed corpus span and missing
    otherwise. Indicator cells are never filled.
    """
    spans = theme_panel.spans()
    wdi = {}
    for r in harmonized.rows:
        wdi[(r.country_iso3, r.year, r.indicator_code)] = r.value
    keys = sorted(set(theme_panel.counts) | {(c, y) for c, y, _ in wdi})
    codes = sorted({code for _, _, code in wdi} | set(harmonized.transforms))

    counts = np.full((len(keys), len(THEMES)), np.nan)
    indicators = {code: np.full(len(keys), np.nan) for code in codes}
    for i, key in enumerate(keys):
        if key in theme_panel.counts:
            counts[i] = theme_panel.counts[key]
        else:
            country, year = key
            span = spans.get(country)
            if span is not None and span[0] <= year <= span[1]:
                counts[i] = 0
        for code in codes:
            value = wdi.get((key[0], key[1], code))
            if value is not None:
                indicators[code][i] = value
    return AnalysisPanel(keys=keys, counts=counts, indicators=indicators)
