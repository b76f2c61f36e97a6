"""Command-line interface: ``policylens <subcommand> ...``.

Every subcommand stages its outputs in a temporary directory and moves them
into ``--out-dir`` only after all of them were written, followed by a
``manifest.json`` listing input and output digests.
"""

import argparse
import dataclasses
import hashlib
import io
import json
import logging
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .ca import G7_ISO3, contingency_from_panel, correspondence_analysis
from .exceptions import PolicyLensError
from .indicators import box_stats, standardized_long, theme_counts, top_countries, zscore
from .ingest import (HarmonizeConfig, format_harmonize_config, format_policy_corpus, harmonize,
                     load_harmonize_config, load_policy_corpus, load_wdi_table,
                     merge_policy_and_wdi)
from .metrics import evaluate, pr_curve
from .panel import run_regression_battery
from .report import (battery_csv, boxplot_csv, ca_coords_csv, ca_summary_csv, indicators_csv,
                     pr_curves_csv, rankings_csv, render_biplot, render_boxplots,
                     render_coef_plot, render_pr_curves)
from .textclf import (TrainConfig, dump_model, load_model, predict_labels, predict_scores_batch,
                      tokenize, train)
from .themes import THEMES

log = logging.getLogger("policylens")

CONFIG_ENV = "POLICYLENS_CONFIG"
MANIFEST_NAME = "manifest.json"

PIPELINE_ARTIFACTS = (
    "indicators.csv", "rankings.csv", "boxplots.csv", "boxplots.svg",
    "ca_coords.csv", "ca_summary.csv", "biplot.svg",
    "battery.csv", "coef_plot.svg",
)


class StageError(PolicyLensError):
    def __init__(self, stage, cause):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {cause}")


@contextmanager
def stage(name):
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except (PolicyLensError, ValueError, KeyError, OSError) as exc:
        raise StageError(name, exc) from exc


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def sha256_file(path):
    return sha256_bytes(Path(path).read_bytes())


class StagedOutputs:
    """Collects output files in a temp dir; ``commit`` moves them in place."""

    def __init__(self, out_dir, manifest_path=None):
        self.out_dir = Path(out_dir)
        self.manifest_path = Path(manifest_path) if manifest_path else self.out_dir / MANIFEST_NAME
        self.out_dir.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=f".{self.out_dir.name}.tmp-",
                                         dir=self.out_dir.parent))
        self.files = {}   # destination path -> staged path

    def write(self, name, text, dest=None):
        staged = self.tmp / f"{len(self.files):03d}-{Path(name).name}"
        staged.write_text(text, encoding="utf-8", newline="\n")
        dest = Path(dest) if dest is not None else self.out_dir / name
        self.files[dest] = staged
        return dest

    def digests(self):
        return {str(dest): sha256_file(staged) for dest, staged in self.files.items()}

    def commit(self, manifest):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for dest, staged in self.files.items():
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(staged, dest)
        staged = self.tmp / MANIFEST_NAME
        staged.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(staged, self.manifest_path)
        self.discard()

    def discard(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


def build_manifest(subcommand, inputs, config_text, outputs, extra=None):
    manifest = {
        "tool": "policylens",
        "version": __version__,
        "subcommand": subcommand,
        "timestamp": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "config_sha256": sha256_bytes(config_text.encode("utf-8")),
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    return manifest


def resolve_config(path):
    """Harmonize config from ``--config``, ``$POLICYLENS_CONFIG`` or the default."""
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        config = load_harmonize_config(path)
    else:
        config = HarmonizeConfig()
    return config, format_harmonize_config(config)


# -- helpers shared by subcommands ---------------------------------------------

def stratified_split(label_sets, test_frac, seed):
    """Hold out ``test_frac`` of every theme-presence pattern, seeded."""
    if not 0.0 < test_frac < 1.0:
        raise ValueError("--split must lie strictly between 0 and 1")
    groups = {}
    for i, labels in enumerate(label_sets):
        groups.setdefault(tuple(t in labels for t in THEMES), []).append(i)
    rng = np.random.default_rng(seed)
    test = []
    for key in sorted(groups):
        idx = rng.permutation(groups[key])
        test += [int(i) for i in idx[:int(round(test_frac * len(idx)))]]
    test_set = set(test)
    train_idx = [i for i in range(len(label_sets)) if i not in test_set]
    return train_idx, sorted(test)


def _evaluation_outputs(staged, prefix, model, docs):
    tokens = [tokenize(d.summary_text) for d in docs]
    scores = predict_scores_batch(model, tokens)
    preds = [predict_labels(s) for s in scores]
    golds = [d.gold_labels for d in docs]
    report = evaluate(preds, golds)
    curves = {}
    for k, theme in enumerate(THEMES):
        y = np.array([theme in g for g in golds])
        if y.any():
            curves[theme] = pr_curve(scores[:, k], y)
    staged.write(f"{prefix}report.csv", report.to_csv())
    staged.write(f"{prefix}report.txt", report.to_text())
    if curves:
        staged.write("pr_curves.csv", pr_curves_csv(curves))
        staged.write("pr_curves.svg", render_pr_curves(curves))
    return report


def _model_text(model):
    buf = io.StringIO()
    dump_model(model, buf)
    return buf.getvalue()


def classify_documents(model, docs):
    if not docs:
        return []
    scores = predict_scores_batch(model, [tokenize(d.summary_text) for d in docs])
    return [dataclasses.replace(d, predicted_labels=predict_labels(s))
            for d, s in zip(docs, scores)]


def _labelled(docs):
    return [d for d in docs if d.gold_labels]


def train_config_from_args(args):
    return TrainConfig(epochs=args.epochs, lr=args.lr, l2=args.l2)


def indicator_outputs(staged, panel, top_k):
    rows = standardized_long(panel)
    rankings = {theme: top_countries(panel, theme, top_k) for theme in THEMES}
    facets = [(theme, [(rc.country_iso3, box_stats(rc.z)) for rc in rankings[theme]])
              for theme in THEMES]
    staged.write("indicators.csv", indicators_csv(rows))
    staged.write("rankings.csv", rankings_csv(rankings))
    staged.write("boxplots.csv", boxplot_csv(facets))
    staged.write("boxplots.svg", render_boxplots(facets))
    return rankings


def ca_outputs(staged, panel, top_n, always_include):
    table = contingency_from_panel(panel, top_n=top_n, always_include=always_include)
    ca = correspondence_analysis(table)
    staged.write("ca_coords.csv", ca_coords_csv(ca))
    staged.write("ca_summary.csv", ca_summary_csv(ca))
    staged.write("biplot.svg", render_biplot(ca))
    return ca, table


def standardize_counts(panel):
    """Replace theme counts by pooled z-scores over the rows where present."""
    counts = panel.counts.copy()
    for k in range(counts.shape[1]):
        ok = np.isfinite(counts[:, k])
        if ok.any():
            counts[ok, k] = zscore(counts[ok, k])
    return type(panel)(keys=panel.keys, counts=counts, indicators=panel.indicators)


def panel_outputs(staged, merged, outcomes, standardized=False, drop_singletons=False,
                  confidence=0.95):
    if standardized:
        merged = standardize_counts(merged)
    battery = run_regression_battery(merged, outcomes, confidence=confidence,
                                     drop_singletons=drop_singletons)
    if not battery.results:
        raise PolicyLensError("every outcome regression failed: " +
                              "; ".join(f"{k}: {v}" for k, v in battery.failures.items()))
    staged.write("battery.csv", battery_csv(battery.results))
    staged.write("coef_plot.svg", render_coef_plot(battery.results))
    return battery


def default_outcomes(harmonized):
    present = {r.indicator_code for r in harmonized.rows}
    return [code for code in harmonized.transforms if code in present]


def _split_codes(text):
    return [c.strip() for c in text.split(",") if c.strip()] if text else []


# -- subcommands ----------------------------------------------------------------

def cmd_train(args):
    config_obj, config_text = resolve_config(args.config)
    staged = StagedOutputs(args.out_dir)
    try:
        docs = _labelled(load_policy_corpus(args.corpus))
        if not docs:
            raise PolicyLensError(f"{args.corpus}: no document carries gold labels")
        train_idx, test_idx = stratified_split([d.gold_labels for d in docs], args.split, args.seed)
        tr = [docs[i] for i in train_idx]
        model = train([tokenize(d.summary_text) for d in tr], [d.gold_labels for d in tr],
                      config=train_config_from_args(args), min_df=args.min_df,
                      max_terms=args.max_terms)
        model_dest = staged.write("model.txt", _model_text(model), dest=args.model_out)
        report = None
        if test_idx:
            report = _evaluation_outputs(staged, "heldout_", model, [docs[i] for i in test_idx])
        extra = {"split": {"train": len(train_idx), "test": len(test_idx), "seed": args.seed}}
        manifest = build_manifest("train", [args.corpus], config_text, staged.digests(), extra)
        staged.commit(manifest)
    except BaseException:
        staged.discard()
        raise
    if report is not None:
        log.info("held-out micro F1 %.4f", report.micro.f1)
    log.info("model written to %s", model_dest)
    return 0


def cmd_classify(args):
    _, config_text = resolve_config(args.config)
    out = Path(args.out)
    staged = StagedOutputs(out.parent, manifest_path=out.parent / f"{out.name}.manifest.json")
    try:
        model = load_model(args.model)
        docs = classify_documents(model, load_policy_corpus(args.corpus))
        staged.write(out.name, format_policy_corpus(docs, with_predictions=True), dest=out)
        manifest = build_manifest("classify", [args.corpus, args.model], config_text,
                                  staged.digests())
        staged.commit(manifest)
    except BaseException:
        staged.discard()
        raise
    return 0


def cmd_evaluate(args):
    _, config_text = resolve_config(args.config)
    staged = StagedOutputs(args.out_dir)
    try:
        model = load_model(args.model)
        docs = _labelled(load_policy_corpus(args.corpus))
        if not docs:
            raise PolicyLensError(f"{args.corpus}: no document carries gold labels")
        _evaluation_outputs(staged, "", model, docs)
        staged.commit(build_manifest("evaluate", [args.corpus, args.model], config_text,
                                     staged.digests()))
    except BaseException:
        staged.discard()
        raise
    return 0


def _theme_panel(args, config):
    docs = load_policy_corpus(args.corpus)
    return theme_counts(docs, source=args.label_source).filter_years(config.min_year)


def cmd_indicators(args):
    config, config_text = resolve_config(args.config)
    staged = StagedOutputs(args.out_dir)
    try:
        indicator_outputs(staged, _theme_panel(args, config), args.top_k)
        staged.commit(build_manifest("indicators", [args.corpus], config_text, staged.digests()))
    except BaseException:
        staged.discard()
        raise
    return 0


def cmd_ca(args):
    config, config_text = resolve_config(args.config)
    staged = StagedOutputs(args.out_dir)
    try:
        _, table = ca_outputs(staged, _theme_panel(args, config), args.top_n,
                              _split_codes(args.always_include))
        staged.commit(build_manifest("ca", [args.corpus], config_text, staged.digests(),
                                     {"warnings": table.warnings}))
    except BaseException:
        staged.discard()
        raise
    return 0


def cmd_panel(args):
    config, config_text = resolve_config(args.config)
    staged = StagedOutputs(args.out_dir)
    try:
        panel = _theme_panel(args, config)
        harmonized = harmonize(load_wdi_table(args.wdi), config)
        merged = merge_policy_and_wdi(panel, harmonized)
        outcomes = _split_codes(args.outcomes) or default_outcomes(harmonized)
        battery = panel_outputs(staged, merged, outcomes, args.standardized_counts,
                                args.drop_singletons, args.confidence)
        staged.commit(build_manifest("panel", [args.corpus, args.wdi], config_text,
                                     staged.digests(), {"failures": battery.failures}))
    except BaseException:
        staged.discard()
        raise
    return 0


def cmd_pipeline(args):
    config = config_text = None
    with stage("config"):
        config, config_text = resolve_config(args.config)
    staged = StagedOutputs(args.out_dir)
    try:
        with stage("load_policies"):
            docs = load_policy_corpus(args.policies)
        if args.model:
            with stage("load_model"):
                model = load_model(args.model)
        else:
            with stage("train"):
                labelled = _labelled(docs)
                if not labelled:
                    raise PolicyLensError("no gold-labelled documents to train on and no --model")
                model = train([tokenize(d.summary_text) for d in labelled],
                              [d.gold_labels for d in labelled])
        with stage("classify"):
            docs = classify_documents(model, docs)
        with stage("theme_counts"):
            panel = theme_counts(docs, source="predicted").filter_years(config.min_year)
        with stage("load_wdi"):
            observations = load_wdi_table(args.wdi)
        with stage("harmonize"):
            harmonized = harmonize(observations, config)
        with stage("merge"):
            merged = merge_policy_and_wdi(panel, harmonized)
        with stage("indicators"):
            indicator_outputs(staged, panel, args.top_k)
        with stage("ca"):
            _, table = ca_outputs(staged, panel, args.top_n, _split_codes(args.always_include))
        with stage("panel"):
            battery = panel_outputs(staged, merged, default_outcomes(harmonized),
                                    args.standardized_counts, args.drop_singletons)
        inputs = [args.policies, args.wdi] + ([args.model] if args.model else [])
        manifest = build_manifest("pipeline", inputs, config_text, staged.digests(),
                                  {"failures": battery.failures, "warnings": table.warnings})
        staged.commit(manifest)
    except BaseException:
        staged.discard()
        raise
    return 0


# -- argument parsing ------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help=f"harmonize config file (fallback: ${CONFIG_ENV})")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="policylens", parents=[common],
                                     description="Climate-policy theme indicators and analyses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    def add_train_options(p):
        p.add_argument("--min-df", type=int, default=2)
        p.add_argument("--max-terms", type=int, default=20000)
        p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
        p.add_argument("--lr", type=float, default=TrainConfig.lr)
        p.add_argument("--l2", type=float, default=TrainConfig.l2)

    p = add("train", cmd_train, "train the theme classifier and evaluate on a held-out split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model-out", default=None)
    add_train_options(p)
    p.add_argument("--split", type=float, default=0.2, help="held-out fraction")
    p.add_argument("--seed", type=int, default=0)

    p = add("classify", cmd_classify, "add predicted labels to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = add("evaluate", cmd_evaluate, "classification report and PR curves for a labelled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)

    def add_label_source(p):
        p.add_argument("--label-source", choices=("auto", "gold", "predicted"), default="auto")

    p = add("indicators", cmd_indicators, "theme counts, z-scores, rankings and boxplots")
    p.add_argument("--corpus", required=True)
    p.add_argument("--top-k", type=int, default=10)
    add_label_source(p)

    def add_ca_options(p):
        p.add_argument("--top-n", type=int, default=50)
        p.add_argument("--always-include", default=",".join(G7_ISO3))

    p = add("ca", cmd_ca, "correspondence analysis of countries x themes")
    p.add_argument("--corpus", required=True)
    add_ca_options(p)
    add_label_source(p)

    def add_panel_options(p):
        p.add_argument("--standardized-counts", action="store_true")
        p.add_argument("--drop-singletons", action="store_true")

    p = add("panel", cmd_panel, "two-way fixed-effects regression battery")
    p.add_argument("--corpus", required=True)
    p.add_argument("--wdi", required=True)
    p.add_argument("--outcomes", default="", help="comma-separated indicator codes")
    p.add_argument("--confidence", type=float, default=0.95)
    add_panel_options(p)
    add_label_source(p)

    p = add("pipeline", cmd_pipeline, "run every stage end to end")
    p.add_argument("--policies", required=True)
    p.add_argument("--wdi", required=True)
    p.add_argument("--model", default=None, help="trained model; trained on the gold labels if omitted")
    p.add_argument("--top-k", type=int, default=10)
    add_ca_options(p)
    add_panel_options(p)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.config = getattr(args, "config", None)
    args.out_dir = getattr(args, "out_dir", None) or "policylens-out"
    args.quiet = getattr(args, "quiet", False)
    if args.command == "train" and args.model_out is None:
        args.model_out = str(Path(args.out_dir) / "model.txt")
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except PolicyLensError as exc:
        log.error("%s", exc)
        return 1
    except (ValueError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
