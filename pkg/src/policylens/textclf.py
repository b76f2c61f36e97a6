"""TF-IDF features and a one-vs-rest logistic multi-label classifier.

Each theme gets an independent binary logistic head trained by full-batch
gradient descent from zero, so training is deterministic without a seed.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import ModelFormatError, TrainingError
from .themes import THEMES

TOKEN_RE = re.compile(r"[^\W_]+")
MODEL_HEADER = "policylens-model v1"


def tokenize(text):
    """Lowercase ``text`` and split it into runs of letters/digits.

    Single-character tokens are dropped.

    >>> tokenize("Climate-Change ACT 2021")
    ['climate', 'change', 'act', '2021']
    """
    return [tok for tok in TOKEN_RE.findall(text.lower()) if len(tok) > 1]


@dataclass(frozen=True, eq=False)
class Vocabulary:
    terms: tuple
    df: tuple
    idf: np.ndarray
    n_docs: int

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index


def smoothed_idf(df, n_docs):
    return np.log((1.0 + n_docs) / (1.0 + np.asarray(df, dtype=float))) + 1.0


def fit_vocabulary(corpus, min_df=2, max_terms=20000):
    """Build a vocabulary from tokenized documents.

    Terms seen in fewer than ``min_df`` documents are discarded. If more than
    ``max_terms`` remain, the most frequent (by document frequency) are kept,
    ties going to the lexicographically smaller term. Retained terms are
    indexed in lexicographic order.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df = Counter()
    for doc in corpus:
        df.update(set(doc))
    kept = [(t, n) for t, n in df.items() if n >= min_df]
    if len(kept) > max_terms:
        kept.sort(key=lambda tn: (-tn[1], tn[0]))
        kept = kept[:max_terms]
    if not kept:
        raise ValueError(f"no term reaches min_df={min_df}; vocabulary is empty")
    kept.sort()
    terms = tuple(t for t, _ in kept)
    dfs = tuple(n for _, n in kept)
    return Vocabulary(terms=terms, df=dfs, idf=smoothed_idf(dfs, len(corpus)), n_docs=len(corpus))


def vectorize(doc, vocab):
    """L2-normalized tf-idf vector of a token sequence.

    Returns ``(indices, weights)`` with strictly increasing indices.
    Documents with no in-vocabulary token give empty arrays (the zero vector).
    """
    tf = Counter(vocab.index[t] for t in doc if t in vocab.index)
    idx = np.array(sorted(tf), dtype=np.int64)
    if idx.size == 0:
        return idx, np.zeros(0)
    w = np.array([tf[i] for i in idx], dtype=float) * vocab.idf[idx]
    return idx, w / np.linalg.norm(w)


def design_matrix(docs, vocab):
    """Stack vectorized token sequences into a CSR matrix."""
    indptr = [0]
    indices = []
    data = []
    for doc in docs:
        idx, w = vectorize(doc, vocab)
        indices.append(idx)
        data.append(w)
        indptr.append(indptr[-1] + idx.size)
    indices = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64)
    data = np.concatenate(data) if data else np.zeros(0)
    return sp.csr_matrix((data, indices, np.array(indptr)), shape=(len(indptr) - 1, len(vocab)))


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log1pexp(z):
    # log(1 + e^z) without overflow
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def loss_and_gradient(w, b, X, y, l2):
    """Regularized mean binary cross-entropy of one logistic head.

    Parameters
    ----------
    w : ndarray, shape (V,)
    b : float
    X : ndarray or sparse matrix, shape (n, V)
    y : ndarray of {0, 1}, shape (n,)
    l2 : float
        Strength of the ``l2 / 2 * ||w||^2`` penalty. The bias is not penalized.

    Returns
    -------
    loss : float
    grad_w : ndarray, shape (V,)
    grad_b : float
    """
    y = np.asarray(y, dtype=float)
    z = X @ w + b
    # -[y ln p + (1-y) ln(1-p)] == log(1 + e^z) - y z
    loss = float(np.mean(_log1pexp(z) - y * z)) + 0.5 * l2 * float(w @ w)
    resid = (sigmoid(z) - y) / y.size
    grad_w = np.asarray(X.T @ resid).ravel() + l2 * w
    grad_b = float(resid.sum())
    return loss, grad_w, grad_b


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    lr: float = 0.5
    l2: float = 1e-4
    tol: float = 1e-8


@dataclass(frozen=True, eq=False)
class Head:
    theme: str
    weights: np.ndarray
    bias: float
    epochs_run: int = 0
    final_loss: float = math.log(2.0)
    loss_trace: tuple = field(default=(), compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class MultiLabelModel:
    vocab: Vocabulary
    heads: tuple
    config: TrainConfig = TrainConfig()

    @property
    def weight_matrix(self):
        return np.column_stack([h.weights for h in self.heads])

    @property
    def biases(self):
        return np.array([h.bias for h in self.heads])


def train_head(X, y, config, theme="head"):
    """Gradient descent on one head from the zero initialization."""
    w = np.zeros(X.shape[1])
    b = 0.0
    loss, gw, gb = loss_and_gradient(w, b, X, y, config.l2)
    trace = [loss]
    epochs_run = 0
    for epoch in range(1, config.epochs + 1):
        w = w - config.lr * gw
        b = b - config.lr * gb
        new_loss, gw, gb = loss_and_gradient(w, b, X, y, config.l2)
        if not math.isfinite(new_loss):
            raise TrainingError(
                f"{theme}: loss became non-finite at epoch {epoch}; learning rate {config.lr} is too large")
        trace.append(new_loss)
        epochs_run = epoch
        converged = abs(loss - new_loss) < config.tol
        loss = new_loss
        if converged:
            break
    return Head(theme=theme, weights=w, bias=b, epochs_run=epochs_run,
                final_loss=loss, loss_trace=tuple(trace))


def train(token_docs, label_sets, config=None, min_df=2, max_terms=20000, vocab=None):
    """Fit the vocabulary and the four theme heads.

    ``token_docs`` are token sequences (see :func:`tokenize`) and
    ``label_sets`` the matching gold theme sets.
    """
    config = config or TrainConfig()
    token_docs = list(token_docs)
    label_sets = list(label_sets)
    if len(token_docs) != len(label_sets):
        raise ValueError("token_docs and label_sets differ in length")
    if not label_sets:
        raise TrainingError("no training documents")
    Y = np.array([[t in labels for t in THEMES] for labels in label_sets], dtype=float)
    for k, theme in enumerate(THEMES):
        n_pos = int(Y[:, k].sum())
        if n_pos == 0 or n_pos == len(Y):
            kind = "positive" if n_pos == 0 else "negative"
            raise TrainingError(f"theme {theme!r} has no {kind} training example")
    if vocab is None:
        vocab = fit_vocabulary(token_docs, min_df=min_df, max_terms=max_terms)
    X = design_matrix(token_docs, vocab)
    heads = tuple(train_head(X, Y[:, k], config, theme) for k, theme in enumerate(THEMES))
    return MultiLabelModel(vocab=vocab, heads=heads, config=config)


def predict_scores(model, vector):
    """Per-theme probabilities for one document.

    ``vector`` is either a dense array of length ``len(model.vocab)`` or an
    ``(indices, weights)`` pair from :func:`vectorize`.
    """
    V = len(model.vocab)
    if isinstance(vector, tuple):
        idx, w = vector
        if idx.size and (idx.min() < 0 or idx.max() >= V):
            raise ValueError(f"vector index out of range for vocabulary of size {V}")
        z = w @ model.weight_matrix[idx] + model.biases
    else:
        x = np.asarray(vector, dtype=float)
        if x.shape != (V,):
            raise ValueError(f"vector has dimension {x.shape}, model expects ({V},)")
        z = x @ model.weight_matrix + model.biases
    return sigmoid(z)


def predict_scores_batch(model, token_docs):
    """Score matrix of shape ``(n_docs, 4)``."""
    X = design_matrix(token_docs, model.vocab)
    return sigmoid(X @ model.weight_matrix + model.biases)


def predict_labels(scores, threshold=0.5):
    """Themes whose score is at least ``threshold`` (inclusive)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly between 0 and 1")
    return frozenset(t for t, s in zip(THEMES, scores) if s >= threshold)


def classify_texts(model, texts, threshold=0.5):
    scores = predict_scores_batch(model, [tokenize(t) for t in texts])
    return scores, [predict_labels(row, threshold) for row in scores]


# -- serialization -----------------------------------------------------------

def _f(x):
    # repr of a Python float round-trips exactly
    return repr(float(x))


def dump_model(model, fh):
    v = model.vocab
    c = model.config
    fh.write(MODEL_HEADER + "\n")
    fh.write(f"config epochs={c.epochs} lr={_f(c.lr)} l2={_f(c.l2)} tol={_f(c.tol)}\n")
    fh.write(f"vocabulary {len(v)} n_docs={v.n_docs}\n")
    for i, (term, df, idf) in enumerate(zip(v.terms, v.df, v.idf)):
        fh.write(f"{term}\t{i}\t{df}\t{_f(idf)}\n")
    for h in model.heads:
        fh.write(f"head {h.theme}\n")
        fh.write(f"meta epochs_run={h.epochs_run} final_loss={_f(h.final_loss)}\n")
        fh.write(f"bias {_f(h.bias)}\n")
        fh.write(" ".join(_f(x) for x in h.weights) + "\n")
    fh.write("end\n")


def save_model(model, path):
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        dump_model(model, fh)


def _kv(line, prefix):
    if not line.startswith(prefix + " "):
        raise ModelFormatError(f"expected line starting with {prefix!r}, got {line[:40]!r}")
    return dict(item.split("=", 1) for item in line[len(prefix) + 1:].split() if "=" in item)


def load_model(path):
    """Read a model written by :func:`save_model`."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if not lines or lines[0] != MODEL_HEADER:
        found = lines[0][:40] if lines else ""
        raise ModelFormatError(f"{path}: unsupported model format {found!r}, expected {MODEL_HEADER!r}")
    try:
        cfg = _kv(lines[1], "config")
        config = TrainConfig(epochs=int(cfg["epochs"]), lr=float(cfg["lr"]),
                             l2=float(cfg["l2"]), tol=float(cfg["tol"]))
        head_line = lines[2].split()
        if head_line[0] != "vocabulary":
            raise ModelFormatError("missing vocabulary block")
        V = int(head_line[1])
        n_docs = int(_kv(lines[2], "vocabulary")["n_docs"])
        terms, dfs, idfs = [], [], []
        for i, line in enumerate(lines[3:3 + V]):
            term, idx, df, idf = line.split("\t")
            if int(idx) != i:
                raise ModelFormatError(f"vocabulary index {idx} out of order at entry {i}")
            terms.append(term)
            dfs.append(int(df))
            idfs.append(float(idf))
        vocab = Vocabulary(terms=tuple(terms), df=tuple(dfs), idf=np.array(idfs), n_docs=n_docs)
        pos = 3 + V
        heads = []
        for theme in THEMES:
            if lines[pos] != f"head {theme}":
                raise ModelFormatError(f"expected head {theme!r}, got {lines[pos][:40]!r}")
            meta = _kv(lines[pos + 1], "meta")
            bias = float(lines[pos + 2].split()[1])
            weights = np.array([float(x) for x in lines[pos + 3].split()])
            if weights.size != V:
                raise ModelFormatError(f"head {theme!r} has {weights.size} weights, vocabulary has {V}")
            heads.append(Head(theme=theme, weights=weights, bias=bias,
                              epochs_run=int(meta["epochs_run"]),
                              final_loss=float(meta["final_loss"])))
            pos += 4
        if lines[pos] != "end":
            raise ModelFormatError("missing end marker")
    except (IndexError, KeyError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from None
    return MultiLabelModel(vocab=vocab, heads=tuple(heads), config=config)
