import csv
import json

import pytest

from policylens.cli import PIPELINE_ARTIFACTS, main
from policylens.ingest import load_policy_corpus


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory, fixture_dir):
    out = tmp_path_factory.mktemp("pipe") / "out"
    code = main(["pipeline", "--policies", str(fixture_dir / "policies.csv"),
                 "--wdi", str(fixture_dir / "wdi.csv"), "--out-dir", str(out), "--quiet"])
    assert code == 0
    return out


def output_digests(out_dir):
    manifest = json.loads((out_dir / "manifest.json").read_text())
    return {name.rsplit("/", 1)[-1]: digest for name, digest in manifest["outputs"].items()}


def test_pipeline_artifacts(pipeline_run):
    assert sorted(p.name for p in pipeline_run.iterdir()) == sorted(PIPELINE_ARTIFACTS + ("manifest.json",))
    manifest = json.loads((pipeline_run / "manifest.json").read_text())
    assert manifest["subcommand"] == "pipeline"
    assert len(manifest["inputs"]) == 2
    assert set(output_digests(pipeline_run)) == set(PIPELINE_ARTIFACTS)


def test_pipeline_rerun_identical(pipeline_run, tmp_path, fixture_dir):
    out = tmp_path / "again"
    assert main(["--quiet", "pipeline", "--policies", str(fixture_dir / "policies.csv"),
                 "--wdi", str(fixture_dir / "wdi.csv"), "--out-dir", str(out)]) == 0
    assert output_digests(out) == output_digests(pipeline_run)


def test_pipeline_failure_names_stage_and_leaves_nothing(tmp_path, fixture_dir, caplog):
    bad = tmp_path / "wdi.csv"
    text = (fixture_dir / "wdi.csv").read_text().splitlines()
    text[5] = text[5].rsplit(",", 1)[0] + ",not-a-number"
    bad.write_text("\n".join(text) + "\n")
    out = tmp_path / "out"
    code = main(["pipeline", "--policies", str(fixture_dir / "policies.csv"),
                 "--wdi", str(bad), "--out-dir", str(out)])
    assert code == 1
    assert "stage 'load_wdi' failed" in caplog.text
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir()] == ["wdi.csv"]  # no temp dirs left behind


@pytest.fixture(scope="module")
def trained(tmp_path_factory, fixture_dir):
    out = tmp_path_factory.mktemp("train")
    assert main(["train", "--corpus", str(fixture_dir / "policies.csv"),
                 "--out-dir", str(out), "--quiet"]) == 0
    return out


def test_train_outputs(trained):
    names = {p.name for p in trained.iterdir()}
    assert {"model.txt", "heldout_report.csv", "heldout_report.txt", "pr_curves.csv",
            "pr_curves.svg", "manifest.json"} <= names
    manifest = json.loads((trained / "manifest.json").read_text())
    assert manifest["split"]["test"] > 0


def test_fixture_heldout_micro_f1(trained):
    rows = {r["category"]: r for r in csv.DictReader((trained / "heldout_report.csv").open())}
    # the fixture is keyword-planted, hence separable
    assert float(rows["Micro Avg"]["f1"]) == 1.0


def test_train_twice_identical_model(trained, tmp_path, fixture_dir):
    assert main(["train", "--corpus", str(fixture_dir / "policies.csv"),
                 "--out-dir", str(tmp_path), "--quiet"]) == 0
    assert (tmp_path / "model.txt").read_bytes() == (trained / "model.txt").read_bytes()


def test_classify_planted_theme_and_empty_cell(trained, tmp_path):
    corpus = tmp_path / "c.csv"
    corpus.write_text("doc_id,country_iso3,year,summary_text,labels\n"
                      "A,FJI,2020,Mangrove salinity coastal drought irrigation watershed plan,\n"
                      "B,FJI,2020,Annual committee report,\n")
    out = tmp_path / "pred.csv"
    assert main(["classify", "--corpus", str(corpus), "--model", str(trained / "model.txt"),
                 "--out", str(out), "--quiet"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["predicted_labels"] == "Adaptation"
    assert rows[1]["predicted_labels"] == ""


def test_classify_rejects_foreign_model(tmp_path, fixture_dir, caplog):
    model = tmp_path / "model.txt"
    model.write_text("policylens-model v0\n")
    out = tmp_path / "pred.csv"
    assert main(["classify", "--corpus", str(fixture_dir / "policies.csv"), "--model", str(model),
                 "--out", str(out)]) == 1
    assert "unsupported model format" in caplog.text
    assert not out.exists()


def test_fixture_regenerates_identically(tmp_path, fixture_dir):
    from policylens.synthetic import write_fixture_set

    write_fixture_set(tmp_path)
    for name in ("policies.csv", "wdi.csv"):
        assert (tmp_path / name).read_bytes() == (fixture_dir / name).read_bytes()


def test_classify_and_evaluate(trained, tmp_path, fixture_dir):
    out = tmp_path / "classified.csv"
    assert main(["classify", "--corpus", str(fixture_dir / "policies.csv"),
                 "--model", str(trained / "model.txt"), "--out", str(out), "--quiet"]) == 0
    docs = load_policy_corpus(out)
    assert all(d.predicted_labels is not None for d in docs)
    assert (tmp_path / "classified.csv.manifest.json").exists()
    ev = tmp_path / "ev"
    assert main(["evaluate", "--corpus", str(fixture_dir / "policies.csv"),
                 "--model", str(trained / "model.txt"), "--out-dir", str(ev), "--quiet"]) == 0
    assert (ev / "report.txt").read_text().count("Avg") == 4


def test_zero_epochs_scores_half(tmp_path, fixture_dir):
    out = tmp_path / "t"
    assert main(["train", "--corpus", str(fixture_dir / "policies.csv"), "--epochs", "0",
                 "--out-dir", str(out), "--quiet"]) == 0
    curves = list(csv.DictReader((out / "pr_curves.csv").open()))
    assert {r["threshold"] for r in curves} == {"0.5"}


def test_classify_empty_corpus(trained, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("doc_id,country_iso3,year,summary_text,labels\n")
    out = tmp_path / "pred.csv"
    assert main(["classify", "--corpus", str(empty), "--model", str(trained / "model.txt"),
                 "--out", str(out), "--quiet"]) == 0
    assert out.read_text() == "doc_id,country_iso3,year,summary_text,labels,predicted_labels\n"


def test_config_from_environment(tmp_path, fixture_dir, monkeypatch):
    conf = tmp_path / "h.conf"
    conf.write_text("min_year = 2019\n" + "\n".join(
        f"{c} = LEVEL" for c in ("GDP", "GNI_ATLAS", "GNI_PPP", "FDI", "EXT_DEBT", "ELEC_CONS",
                                 "ADOL_FERT", "SEC_ENROLL")) + "\n")
    monkeypatch.setenv("POLICYLENS_CONFIG", str(conf))
    out = tmp_path / "ind"
    assert main(["indicators", "--corpus", str(fixture_dir / "policies.csv"),
                 "--out-dir", str(out), "--quiet"]) == 0
    years = {int(r["year"]) for r in csv.DictReader((out / "indicators.csv").open())}
    assert min(years) == 2019


def test_bad_config_fails_cleanly(tmp_path, fixture_dir, caplog):
    conf = tmp_path / "h.conf"
    conf.write_text("GDP = CUBE\n")
    code = main(["--config", str(conf), "pipeline", "--policies", str(fixture_dir / "policies.csv"),
                 "--wdi", str(fixture_dir / "wdi.csv"), "--out-dir", str(tmp_path / "o")])
    assert code == 1
    assert "stage 'config' failed" in caplog.text


def test_ca_and_panel_subcommands(tmp_path, fixture_dir):
    pred = tmp_path / "ca"
    assert main(["ca", "--corpus", str(fixture_dir / "policies.csv"), "--label-source", "gold",
                 "--out-dir", str(pred), "--quiet"]) == 0
    assert (pred / "biplot.svg").exists()
    out = tmp_path / "panel"
    # the fixture contains unlabeled documents, so gold counts are a subset
    assert main(["panel", "--corpus", str(fixture_dir / "policies.csv"), "--label-source", "gold",
                 "--wdi", str(fixture_dir / "wdi.csv"), "--outcomes", "GDP,FDI",
                 "--out-dir", str(out), "--quiet"]) == 0
    rows = list(csv.DictReader((out / "battery.csv").open()))
    assert {r["outcome"] for r in rows} == {"GDP", "FDI"}
    assert len(rows) == 8


def test_module_entry_point_help(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    assert "pipeline" in capsys.readouterr().out
