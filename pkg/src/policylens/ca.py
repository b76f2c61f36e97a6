"""Correspondence analysis of the country x theme contingency table."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, TableError
from .themes import THEMES

log = logging.getLogger(__name__)

G7_ISO3 = ("CAN", "DEU", "FRA", "GBR", "ITA", "JPN", "USA")

MAX_SVD_COLUMNS = 4
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
SINGULAR_TOL = 1e-12


def _off_norm(A):
    # summing the off-diagonal entries directly avoids cancellation
    off = A - np.diag(np.diag(A))
    return float(np.sqrt(np.sum(off ** 2)))


def jacobi_eigh(A, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the Frobenius norm of the off-diagonal part drops below
    ``tol`` (scaled by ``max(1, ||A||_F)``). Returns ``(eigenvalues, V)``
    with eigenvectors in the columns of ``V``, unsorted.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(A)))
    off = _off_norm(A)
    for sweep in range(max_sweeps):
        if off < threshold:
            return np.diag(A).copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                # rotation angle that annihilates A[p, q]
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta  # theta**2 would overflow
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                A[p, q] = A[q, p] = 0.0
                V = V @ J
        off = _off_norm(A)
    if off < threshold:
        return np.diag(A).copy(), V
    raise ConvergenceError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
        f"(off-diagonal norm {off:.3e}, threshold {threshold:.3e})")


def svd_small(S):
    """Thin SVD of a matrix with at most four columns via Jacobi on ``S.T @ S``.

    Returns ``(U, sigma, V)`` with ``sigma`` sorted descending. Singular
    values at or below 1e-12 are dropped together with their vectors, so
    ``U`` has one column per retained value while ``V`` keeps all columns
    (retained first). Each column of ``V`` has its largest-magnitude entry
    positive.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2:
        raise ValueError("svd_small expects a 2-D matrix")
    if S.shape[1] > MAX_SVD_COLUMNS:
        raise ValueError(f"svd_small handles at most {MAX_SVD_COLUMNS} columns, got {S.shape[1]}")
    _, V = jacobi_eigh(S.T @ S)
    # sqrt of a tiny eigenvalue of S'S only resolves sigma to ~1e-8;
    # the norm of S v resolves it to working precision
    sigma = np.linalg.norm(S @ V, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    V = V[:, order]
    for k in range(V.shape[1]):
        if V[np.argmax(np.abs(V[:, k])), k] < 0:
            V[:, k] = -V[:, k]
    keep = sigma > SINGULAR_TOL
    U = (S @ V[:, keep]) / sigma[keep]
    return U, sigma[keep], V


@dataclass
class ContingencyTable:
    rows: tuple
    columns: tuple
    counts: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def total(self):
        return float(self.counts.sum())


def contingency_from_panel(panel, top_n=50, always_include=G7_ISO3):
    """Country x theme table pooled over all years of ``panel``.

    Keeps the ``top_n`` countries by total policy count (ties by ISO3) plus
    any ``always_include`` country present in the panel. All-zero rows and
    columns are dropped and a warning recorded.
    """
    if not len(panel):
        raise TableError("theme panel is empty")
    totals = {}
    for (c, _), v in panel.counts.items():
        totals[c] = totals.get(c, np.zeros(len(THEMES))) + np.asarray(v, dtype=float)
    ranked = sorted(totals, key=lambda c: (-totals[c].sum(), c))
    selected = set(ranked[:top_n]) | (set(always_include) & set(totals))
    warnings = []
    rows = []
    for c in sorted(selected):
        if totals[c].sum() == 0:
            warnings.append(f"dropped country {c}: no policies in any theme")
            continue
        rows.append(c)
    if not rows:
        raise TableError("every selected country has a zero total")
    counts = np.array([totals[c] for c in rows])
    col_keep = counts.sum(axis=0) > 0
    for theme, keep in zip(THEMES, col_keep):
        if not keep:
            warnings.append(f"dropped theme {theme}: no policies among selected countries")
    counts = counts[:, col_keep]
    columns = tuple(t for t, k in zip(THEMES, col_keep) if k)
    for w in warnings:
        log.warning(w)
    if counts.shape[0] < 2 or counts.shape[1] < 2:
        raise TableError(f"contingency table is {counts.shape[0]}x{counts.shape[1]}; CA needs at least 2x2")
    return ContingencyTable(rows=tuple(rows), columns=columns, counts=counts, warnings=warnings)


@dataclass
class CAResult:
    row_labels: tuple
    column_labels: tuple
    singular_values: np.ndarray
    row_coords: np.ndarray
    column_coords: np.ndarray
    row_masses: np.ndarray
    column_masses: np.ndarray

    @property
    def inertia(self):
        return self.singular_values ** 2

    @property
    def total_inertia(self):
        return float(self.inertia.sum())

    @property
    def shares(self):
        total = self.total_inertia
        return self.inertia / total if total > 0 else np.zeros_like(self.inertia)

    @property
    def n_dims(self):
        return self.singular_values.size


def standardized_residuals(counts):
    """``D_r^{-1/2} (P - r c^T) D_c^{-1/2}`` with row and column masses."""
    N = np.asarray(counts, dtype=float)
    if (N < 0).any():
        raise TableError("contingency table has negative entries")
    n = N.sum()
    if n <= 0:
        raise TableError("contingency table has zero total")
    P = N / n
    r = P.sum(axis=1)
    c = P.sum(axis=0)
    if (r == 0).any() or (c == 0).any():
        raise TableError("contingency table has an all-zero row or column")
    S = (P - np.outer(r, c)) / np.sqrt(np.outer(r, c))
    return S, r, c


def correspondence_analysis(table):
    """Symmetric-map CA: principal coordinates for rows and columns.

    Accepts a :class:`ContingencyTable` or a plain 2-D count array.
    """
    if isinstance(table, ContingencyTable):
        counts, row_labels, col_labels = table.counts, table.rows, table.columns
    else:
        counts = np.asarray(table, dtype=float)
        row_labels = tuple(str(i) for i in range(counts.shape[0]))
        col_labels = tuple(str(j) for j in range(counts.shape[1]))
    S, r, c = standardized_residuals(counts)
    U, sigma, V = svd_small(S)
    # the trivial dimension (singular vector sqrt(c)) has sigma 0 in exact arithmetic
    max_dims = min(S.shape) - 1
    sigma = sigma[:max_dims]
    U = U[:, :sigma.size]
    V = V[:, :sigma.size]
    F = U * sigma / np.sqrt(r)[:, None]
    G = V * sigma / np.sqrt(c)[:, None]
    return CAResult(row_labels=tuple(row_labels), column_labels=tuple(col_labels),
                    singular_values=sigma, row_coords=F, column_coords=G,
                    row_masses=r, column_masses=c)
