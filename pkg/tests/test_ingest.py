import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from policylens.exceptions import ConfigError, DuplicateKeyError, RowError, SchemaError
from policylens.indicators import ThemePanel
from policylens.ingest import (HarmonizeConfig, IndicatorObservation, harmonize,
                               load_harmonize_config, load_policy_corpus, load_wdi_table,
                               merge_policy_and_wdi, parse_harmonize_config,
                               write_policy_corpus, write_wdi_table)

from conftest import write

HEADER = "doc_id,country_iso3,year,summary_text,labels\n"


def test_policy_row_maps_fields(tmp_path):
    p = write(tmp_path / "p.csv", HEADER + 'D1,DEU,2021,"Carbon budget act","Mitigation"\n')
    (doc,) = load_policy_corpus(p)
    assert (doc.doc_id, doc.country_iso3, doc.year) == ("D1", "DEU", 2021)
    assert doc.summary_text == "Carbon budget act"
    assert doc.gold_labels == {"Mitigation"}
    assert doc.predicted_labels is None


def test_pipe_separated_labels(tmp_path):
    p = write(tmp_path / "p.csv",
              HEADER + 'D1,FJI,2019,"Coastal plan","Adaptation|Disaster Risk Management"\n')
    (doc,) = load_policy_corpus(p)
    assert doc.gold_labels == {"Adaptation", "Disaster Risk Management"}


def test_empty_labels_is_unlabeled(tmp_path):
    p = write(tmp_path / "p.csv", HEADER + 'D1,FJI,2019,"Coastal plan",\n')
    assert load_policy_corpus(p)[0].gold_labels == frozenset()


def test_rows_keep_file_order(tmp_path):
    body = "".join(f'D{i},DEU,2020,"text {i}",Mitigation\n' for i in (3, 1, 2))
    docs = load_policy_corpus(write(tmp_path / "p.csv", HEADER + body))
    assert [d.doc_id for d in docs] == ["D3", "D1", "D2"]


def test_missing_column_named(tmp_path):
    p = write(tmp_path / "p.csv", "doc_id,country_iso3,year,summary_text\nD1,DEU,2020,x\n")
    with pytest.raises(SchemaError, match="labels"):
        load_policy_corpus(p)


@pytest.mark.parametrize("row, fragment", [
    ('D1,deu,2020,"x",Mitigation\n', "ISO3"),
    ('D1,DEUT,2020,"x",Mitigation\n', "ISO3"),
    ('D1,DEU,20x0,"x",Mitigation\n', "integer"),
    ('D1,DEU,1850,"x",Mitigation\n', "1900"),
    ('D1,DEU,2020,"   ",Mitigation\n', "empty"),
    ('D1,DEU,2020,"x",Climate\n', "unknown theme"),
])
def test_bad_row_reports_line(tmp_path, row, fragment):
    p = write(tmp_path / "p.csv", HEADER + 'D0,FRA,2020,"ok",Mitigation\n' + row)
    with pytest.raises(RowError, match=fragment) as info:
        load_policy_corpus(p)
    assert info.value.line == 3


def test_duplicate_doc_id(tmp_path):
    p = write(tmp_path / "p.csv", HEADER + 'D1,DEU,2020,"a",\nD1,FRA,2021,"b",\n')
    with pytest.raises(DuplicateKeyError, match="D1"):
        load_policy_corpus(p)


def test_multiline_quoted_text(tmp_path):
    p = write(tmp_path / "p.csv", HEADER + 'D1,DEU,2020,"first line\nsecond, line",Mitigation\n')
    assert load_policy_corpus(p)[0].summary_text == "first line\nsecond, line"


# -- WDI table ------------------------------------------------------------------

WDI_HEADER = "country_iso3,year,indicator_code,value\n"


def test_wdi_single_observation(tmp_path):
    obs = load_wdi_table(write(tmp_path / "w.csv", WDI_HEADER + "DEU,2019,GDP,3.8e12\n"))
    assert obs == [IndicatorObservation("DEU", 2019, "GDP", 3.8e12)]


def test_wdi_blank_value_is_missing(tmp_path):
    obs = load_wdi_table(write(tmp_path / "w.csv", WDI_HEADER + "DEU,2019,GDP,\n"))
    assert obs == []


def test_wdi_duplicate_key(tmp_path):
    p = write(tmp_path / "w.csv", WDI_HEADER + "DEU,2019,GDP,1\nDEU,2019,GDP,2\n")
    with pytest.raises(DuplicateKeyError, match="'DEU', 2019, 'GDP'"):
        load_wdi_table(p)


@pytest.mark.parametrize("value", ["abc", "nan", "inf"])
def test_wdi_bad_value(tmp_path, value):
    p = write(tmp_path / "w.csv", WDI_HEADER + f"DEU,2019,GDP,{value}\n")
    with pytest.raises(RowError) as info:
        load_wdi_table(p)
    assert info.value.line == 2


def test_wdi_schema(tmp_path):
    with pytest.raises(SchemaError, match="indicator_code"):
        load_wdi_table(write(tmp_path / "w.csv", "country_iso3,year,value\nDEU,2019,1\n"))


iso3 = st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ", min_size=3, max_size=3)
finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.tuples(iso3, st.integers(1900, 2100), st.sampled_from(["GDP", "FDI"])),
                       finite, max_size=30))
def test_wdi_round_trip(tmp_path_factory, cells):
    obs = [IndicatorObservation(c, y, k, v) for (c, y, k), v in cells.items()]
    path = tmp_path_factory.mktemp("rt") / "w.csv"
    write_wdi_table(obs, path)
    assert Counter(load_wdi_table(path)) == Counter(obs)


def test_policy_round_trip(tmp_path, planted_corpus):
    docs, _ = planted_corpus
    write_policy_corpus(docs, tmp_path / "p.csv")
    assert load_policy_corpus(tmp_path / "p.csv") == docs


# -- harmonize ------------------------------------------------------------------

def test_config_parse():
    cfg = parse_harmonize_config("# comment\nmin_year = 2016\nGDP = log\nFDI = LEVEL  # keep sign\n")
    assert cfg.min_year == 2016
    assert cfg.transforms == {"GDP": "LOG", "FDI": "LEVEL"}


@pytest.mark.parametrize("text", ["GDP LOG", "GDP = SQRT", "min_year = soon", "GDP = LOG\nGDP = LEVEL"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_harmonize_config(text)


def test_shipped_config_matches_defaults(fixture_dir):
    assert load_harmonize_config(fixture_dir / "harmonize.conf") == HarmonizeConfig()


def test_year_filter_drops_2014():
    hp = harmonize([IndicatorObservation("DEU", 2014, "GDP", 3.7e12)])
    assert hp.rows == []
    assert hp.drops["GDP"] == {"year_filter": 1, "nonpositive_log": 0}


def test_log_transform():
    hp = harmonize([IndicatorObservation("DEU", 2019, "GDP", 1000.0)])
    assert hp.rows[0].value == pytest.approx(6.907755, abs=1e-6)


def test_negative_fdi_level_passes_through():
    hp = harmonize([IndicatorObservation("USA", 2019, "FDI", -2.5e9)])
    assert hp.rows[0].value == -2.5e9


def test_nonpositive_log_dropped_and_counted():
    obs = [IndicatorObservation("DEU", 2019, "GDP", 0.0),
           IndicatorObservation("DEU", 2020, "GDP", -1.0),
           IndicatorObservation("DEU", 2021, "GDP", 2.0)]
    hp = harmonize(obs)
    assert len(hp.rows) == 1
    assert hp.drops["GDP"]["nonpositive_log"] == 2


def test_unknown_indicator_is_config_error():
    with pytest.raises(ConfigError, match="POP"):
        harmonize([IndicatorObservation("DEU", 2019, "POP", 8e7)])


obs_strategy = st.lists(
    st.builds(IndicatorObservation, iso3, st.integers(2005, 2025),
              st.sampled_from(["GDP", "FDI", "EXT_DEBT", "SEC_ENROLL"]),
              st.floats(-1e6, 1e13, allow_nan=False)),
    max_size=60, unique_by=lambda o: (o.country_iso3, o.year, o.indicator_code))


@settings(max_examples=100, deadline=None)
@given(obs_strategy, st.integers(2005, 2025))
def test_harmonize_accounting(obs, min_year):
    hp = harmonize(obs, HarmonizeConfig(min_year=min_year))
    assert len(hp.rows) <= len(obs)
    assert len(obs) == len(hp.rows) + hp.n_dropped
    assert all(r.year >= min_year for r in hp.rows)
    raw = {(o.country_iso3, o.year, o.indicator_code): o.value for o in obs}
    for r in hp.rows:
        if hp.transforms[r.indicator_code] == "LOG":
            v = raw[(r.country_iso3, r.year, r.indicator_code)]
            assert math.exp(r.value) == pytest.approx(v, rel=1e-12)


# -- merge ------------------------------------------------------------------------

def _hp(rows):
    return harmonize([IndicatorObservation(*r) for r in rows], HarmonizeConfig(min_year=2000))


def test_merge_outer_join_and_zero_fill():
    themes = ThemePanel({("DEU", 2016): (2, 0, 0, 0), ("DEU", 2019): (1, 1, 0, 0),
                         ("TUV", 2019): (0, 1, 1, 1)})
    hp = _hp([("DEU", 2019, "GDP", 100.0), ("DEU", 2017, "GDP", 90.0),
              ("USA", 2019, "GDP", 500.0), ("DEU", 2021, "GDP", 95.0)])
    m = merge_policy_and_wdi(themes, hp)
    rows = {k: i for i, k in enumerate(m.keys)}
    assert len(rows) == len(m.keys)

    i = rows[("DEU", 2019)]
    np.testing.assert_array_equal(m.counts[i], [1, 1, 0, 0])
    assert m.indicators["GDP"][i] == pytest.approx(math.log(100.0))

    i = rows[("TUV", 2019)]
    np.testing.assert_array_equal(m.counts[i], [0, 1, 1, 1])
    assert all(np.isnan(m.indicators[code][i]) for code in m.indicators)

    # inside DEU's corpus span 2016-2019 without policies -> zero counts
    np.testing.assert_array_equal(m.counts[rows[("DEU", 2017)]], [0, 0, 0, 0])
    # outside the span or outside the corpus -> missing, not zero
    assert np.isnan(m.counts[rows[("DEU", 2021)]]).all()
    assert np.isnan(m.counts[rows[("USA", 2019)]]).all()
    assert m.keys == sorted(m.keys)
