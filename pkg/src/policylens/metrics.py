"""Multi-label evaluation: confusion counts, classification report, PR curves."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .themes import THEMES


@dataclass(frozen=True)
class ThemeCounts:
    tp: int
    fp: int
    fn: int

    @property
    def support(self):
        return self.tp + self.fn


def confusion_counts(predictions, golds):
    """Per-theme TP/FP/FN from aligned predicted and gold label sets.

    Returns a dict mapping each theme to :class:`ThemeCounts`.
    """
    predictions = list(predictions)
    golds = list(golds)
    if len(predictions) != len(golds):
        raise ValueError(f"{len(predictions)} predictions vs {len(golds)} gold label sets")
    out = {}
    for theme in THEMES:
        tp = fp = fn = 0
        for pred, gold in zip(predictions, golds):
            if theme in pred:
                if theme in gold:
                    tp += 1
                else:
                    fp += 1
            elif theme in gold:
                fn += 1
        out[theme] = ThemeCounts(tp, fp, fn)
    return out


def _ratio(num, den):
    return num / den if den else 0.0


def prf(tp, fp, fn):
    """Precision, recall and F1 with the 0-on-empty-denominator convention."""
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    f = _ratio(2 * p * r, p + r)
    return p, r, f


@dataclass(frozen=True)
class ReportRow:
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ReportTable:
    themes: tuple
    micro: ReportRow
    macro: ReportRow
    weighted: ReportRow
    samples: ReportRow | None

    @property
    def total_support(self):
        return sum(r.support for r in self.themes)

    def rows(self):
        out = list(self.themes) + [self.micro, self.macro, self.weighted]
        if self.samples is not None:
            out.append(self.samples)
        return out

    def row(self, name):
        for r in self.rows():
            if r.name == name:
                return r
        raise KeyError(name)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "precision", "recall", "f1", "support"])
        for r in self.rows():
            w.writerow([r.name, f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.f1:.6f}", r.support])
        return buf.getvalue()

    def to_text(self, digits=2):
        width = max(len(r.name) for r in self.rows()) + 2
        head = f"{'':<{width}}{'precision':>10}{'recall':>10}{'f1-score':>10}{'support':>10}"
        lines = [head, ""]
        for i, r in enumerate(self.rows()):
            if i == len(self.themes):
                lines.append("")
            lines.append(f"{r.name:<{width}}{r.precision:>10.{digits}f}{r.recall:>10.{digits}f}"
                         f"{r.f1:>10.{digits}f}{r.support:>10d}")
        return "\n".join(lines) + "\n"


def _samples_average(predictions, golds):
    ps, rs, fs = [], [], []
    for pred, gold in zip(predictions, golds):
        pred, gold = set(pred), set(gold)
        if not pred and not gold:
            p = r = f = 1.0
        elif not pred or not gold:
            p = r = f = 0.0
        else:
            inter = len(pred & gold)
            p = inter / len(pred)
            r = inter / len(gold)
            f = _ratio(2 * p * r, p + r)
        ps.append(p)
        rs.append(r)
        fs.append(f)
    if not ps:
        return 0.0, 0.0, 0.0
    return float(np.mean(ps)), float(np.mean(rs)), float(np.mean(fs))


def classification_report(counts, sample_level=None):
    """Per-theme and averaged precision/recall/F1.

    Parameters
    ----------
    counts : dict
        Theme -> :class:`ThemeCounts`, as returned by :func:`confusion_counts`.
    sample_level : (predictions, golds), optional
        Per-document label sets for the samples average. When omitted the
        samples row is ``None``.
    """
    rows = []
    for theme in THEMES:
        c = counts[theme]
        rows.append(ReportRow(theme, *prf(c.tp, c.fp, c.fn), c.support))
    total = sum(r.support for r in rows)

    tp = sum(counts[t].tp for t in THEMES)
    fp = sum(counts[t].fp for t in THEMES)
    fn = sum(counts[t].fn for t in THEMES)
    micro = ReportRow("Micro Avg", *prf(tp, fp, fn), total)

    P = np.array([[r.precision, r.recall, r.f1] for r in rows])
    macro = ReportRow("Macro Avg", *map(float, P.mean(axis=0)), total)
    sup = np.array([r.support for r in rows], dtype=float)
    wavg = P.T @ sup / total if total else np.zeros(3)
    weighted = ReportRow("Weighted Avg", *map(float, wavg), total)

    samples = None
    if sample_level is not None:
        preds, golds = sample_level
        samples = ReportRow("Samples Avg", *_samples_average(preds, golds), total)
    return ReportTable(tuple(rows), micro, macro, weighted, samples)


def evaluate(predictions, golds):
    """Confusion counts and the full report in one call."""
    predictions = list(predictions)
    golds = list(golds)
    return classification_report(confusion_counts(predictions, golds), (predictions, golds))


@dataclass(frozen=True)
class PRCurve:
    """Operating points ordered from the highest threshold to the lowest."""

    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    average_precision: float


def pr_curve(scores, golds):
    """Precision-recall sweep and step-wise average precision for one theme.

    Every distinct score is one threshold; documents with tied scores enter
    the predicted-positive set together.
    """
    s = np.asarray(scores, dtype=float)
    g = np.asarray(golds).astype(bool)
    if s.shape != g.shape:
        raise ValueError("scores and golds differ in shape")
    n_pos = int(g.sum())
    if n_pos == 0:
        raise ValueError("pr_curve needs at least one positive document; AP is undefined")
    order = np.argsort(-s, kind="stable")
    s, g = s[order], g[order]
    # last index of each block of tied scores
    ends = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(g)[ends]
    n_pred = ends + 1
    precision = tp / n_pred
    recall = tp / n_pos
    ap = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return PRCurve(thresholds=s[ends], precision=precision, recall=recall, average_precision=ap)
