"""Two-way fixed-effects regression on unbalanced country-year panels.

Country and year effects are absorbed by alternating projections, slopes come
from a Householder-QR least-squares fit of the demeaned data, and standard
errors are clustered by country.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .exceptions import (CollinearityError, ConvergenceError, IdentificationError,
                         PolicyLensError)
from .themes import THEMES

log = logging.getLogger(__name__)

RANK_TOL = 1e-10


@dataclass(frozen=True)
class RegressionSpec:
    outcome: str
    regressors: tuple = THEMES
    confidence: float = 0.95
    drop_singletons: bool = False

    def __post_init__(self):
        regs = tuple(self.regressors)
        object.__setattr__(self, "regressors", regs)
        if not regs:
            raise ValueError("regressor list is empty")
        if len(set(regs)) != len(regs):
            raise ValueError("regressor list has duplicates")
        if self.outcome in regs:
            raise ValueError(f"outcome {self.outcome!r} is also a regressor")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie strictly between 0 and 1")


@dataclass
class RegressionSample:
    countries: np.ndarray
    years: np.ndarray
    y: np.ndarray
    X: np.ndarray
    regressors: tuple

    @property
    def n_obs(self):
        return self.y.size


def _codes(labels):
    uniq, codes = np.unique(labels, return_inverse=True)
    return uniq, codes


def _drop_singletons(keep_rows, countries, years):
    # iterate: dropping a singleton country can create a singleton year
    keep = keep_rows.copy()
    while True:
        changed = False
        for ids in (countries, years):
            vals, counts = np.unique(ids[keep], return_counts=True)
            single = set(vals[counts == 1])
            if single:
                mask = np.array([v in single for v in ids]) & keep
                keep &= ~mask
                changed = True
        if not changed:
            return keep


def assemble_regression_sample(panel, spec):
    """Listwise-complete rows of ``panel`` for ``spec``, in (country, year) order."""
    keys = panel.keys
    countries = np.array([c for c, _ in keys])
    years = np.array([y for _, y in keys])
    y = np.asarray(panel.column(spec.outcome), dtype=float)
    X = np.column_stack([np.asarray(panel.column(r), dtype=float) for r in spec.regressors])
    keep = np.isfinite(y) & np.isfinite(X).all(axis=1)
    if spec.drop_singletons:
        keep = _drop_singletons(keep, countries, years)
    order = np.lexsort((years[keep], countries[keep]))
    sample = RegressionSample(countries=countries[keep][order], years=years[keep][order],
                              y=y[keep][order], X=X[keep][order], regressors=spec.regressors)
    n_c = np.unique(sample.countries).size
    n_t = np.unique(sample.years).size
    needed = len(spec.regressors) + n_c + n_t
    if sample.n_obs < needed:
        raise IdentificationError(
            f"{spec.outcome}: {sample.n_obs} usable rows, need at least {needed} "
            f"({len(spec.regressors)} regressors + {n_c} countries + {n_t} years)")
    return sample


def _group_demean(M, codes, n_groups):
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    sums = np.zeros((n_groups, M.shape[1]))
    np.add.at(sums, codes, M)
    return M - (sums / counts[:, None])[codes]


def within_transform(sample, tol=1e-10, max_iter=1000):
    """Sweep out country and year means by alternating projections.

    Returns ``(y_dm, X_dm, iterations)``. Each iteration subtracts country
    means and then year means from every column; iteration stops once no cell
    moved by ``tol`` or more. Columns whose magnitude exceeds 1 are judged on
    the change relative to their largest absolute raw value, since an
    absolute 1e-10 is below float resolution for values like 1e10.
    """
    _, c_codes = _codes(sample.countries)
    _, t_codes = _codes(sample.years)
    n_c = c_codes.max() + 1 if c_codes.size else 0
    n_t = t_codes.max() + 1 if t_codes.size else 0
    M = np.column_stack([sample.y, sample.X])
    scale = np.maximum(1.0, np.abs(M).max(axis=0)) if M.size else np.ones(M.shape[1])
    change = np.inf
    for it in range(1, max_iter + 1):
        prev = M
        M = _group_demean(M, c_codes, n_c)
        M = _group_demean(M, t_codes, n_t)
        change = float(np.max(np.abs(M - prev) / scale)) if M.size else 0.0
        if change < tol:
            return M[:, 0], M[:, 1:], it
    raise ConvergenceError(
        f"demeaning did not converge in {max_iter} iterations (last scaled max change {change:.3e})")


def householder_qr(A):
    """Householder QR. Returns ``(V, R)``: reflectors and upper-triangular R.

    ``V[:, k]`` is the unit Householder vector of step ``k`` (zero above row k).
    """
    A = np.array(A, dtype=float)
    m, n = A.shape
    V = np.zeros((m, n))
    for k in range(n):
        x = A[k:, k]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            continue
        v = x.copy()
        v[0] += np.copysign(norm, x[0])
        v /= np.linalg.norm(v)
        A[k:, k:] -= 2.0 * np.outer(v, v @ A[k:, k:])
        V[k:, k] = v
    return V, np.triu(A[:n, :])


def _apply_qt(V, b):
    b = np.array(b, dtype=float)
    for k in range(V.shape[1]):
        v = V[k:, k]
        b[k:] -= 2.0 * v * (v @ b[k:])
    return b


def ols(X, y, names=None):
    """Least squares via Householder QR.

    Returns ``(beta, residuals)``. Raises :class:`CollinearityError` naming
    the first column whose diagonal of R falls below ``1e-10 * max|R|``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = X.shape
    if m < n:
        raise IdentificationError(f"{m} rows for {n} columns")
    names = list(names) if names is not None else [f"x{j}" for j in range(n)]
    V, R = householder_qr(X)
    diag = np.abs(np.diag(R))
    scale = np.abs(R).max() if R.size else 0.0
    for j in range(n):
        if scale == 0.0 or diag[j] < RANK_TOL * scale:
            raise CollinearityError(names[j])
    qty = _apply_qt(V, y)
    beta = np.zeros(n)
    for j in range(n - 1, -1, -1):
        beta[j] = (qty[j] - R[j, j + 1:] @ beta[j + 1:]) / R[j, j]
    return beta, y - X @ beta


def cluster_robust_vcov(X, residuals, clusters):
    """Cluster-robust sandwich covariance with the usual small-sample factor.

    ``c * (X'X)^-1 [sum_g X_g' e_g e_g' X_g] (X'X)^-1`` where
    ``c = G/(G-1) * (N-1)/(N-K)``.
    """
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    labels, codes = _codes(np.asarray(clusters))
    G = labels.size
    if G < 2:
        raise IdentificationError(f"cluster-robust covariance needs at least 2 clusters, got {G}")
    N, K = X.shape
    scores = np.zeros((G, K))
    np.add.at(scores, codes, X * e[:, None])
    bread = np.linalg.inv(X.T @ X)
    meat = scores.T @ scores
    c = (G / (G - 1)) * ((N - 1) / (N - K))
    V = c * bread @ meat @ bread
    return (V + V.T) / 2.0


@dataclass(frozen=True)
class Coefficient:
    name: str
    beta: float
    se: float
    ci_low: float
    ci_high: float

    @property
    def significant(self):
        return self.ci_low > 0.0 or self.ci_high < 0.0


@dataclass
class FEResult:
    outcome: str
    coefficients: tuple
    n_obs: int
    n_countries: int
    n_years: int
    iterations: int
    within_r2: float
    confidence: float
    vcov: np.ndarray = field(repr=False, default=None)

    def coef(self, name):
        for c in self.coefficients:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def beta(self):
        return np.array([c.beta for c in self.coefficients])

    @property
    def se(self):
        return np.array([c.se for c in self.coefficients])


def confidence_intervals(beta, se, n_clusters, confidence=0.95):
    tcrit = stats.t.ppf(0.5 + confidence / 2.0, n_clusters - 1)
    return beta - tcrit * se, beta + tcrit * se


def fit_twoway_fe(panel, spec, tol=1e-10, max_iter=1000):
    """Two-way FE slopes with country-clustered standard errors and t CIs."""
    sample = assemble_regression_sample(panel, spec)
    y_dm, X_dm, iterations = within_transform(sample, tol=tol, max_iter=max_iter)
    beta, resid = ols(X_dm, y_dm, names=spec.regressors)
    V = cluster_robust_vcov(X_dm, resid, sample.countries)
    se = np.sqrt(np.clip(np.diag(V), 0.0, None))
    G = np.unique(sample.countries).size
    lo, hi = confidence_intervals(beta, se, G, spec.confidence)
    sst = float(y_dm @ y_dm)
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 0.0
    coefs = tuple(Coefficient(name, float(b), float(s), float(l), float(h))
                  for name, b, s, l, h in zip(spec.regressors, beta, se, lo, hi))
    return FEResult(outcome=spec.outcome, coefficients=coefs, n_obs=sample.n_obs,
                    n_countries=G, n_years=np.unique(sample.years).size,
                    iterations=iterations, within_r2=min(max(r2, 0.0), 1.0),
                    confidence=spec.confidence, vcov=V)


@dataclass
class BatteryResult:
    results: list
    failures: dict

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)


def run_regression_battery(panel, outcomes, regressors=THEMES, confidence=0.95,
                           drop_singletons=False):
    """Fit one two-way FE model per outcome; failures are recorded, not raised."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("outcome list is empty")
    results = []
    failures = {}
    for outcome in outcomes:
        try:
            spec = RegressionSpec(outcome, tuple(regressors), confidence, drop_singletons)
            results.append(fit_twoway_fe(panel, spec))
        except (PolicyLensError, KeyError, ValueError) as exc:
            log.warning("regression for %s failed: %s", outcome, exc)
            failures[outcome] = str(exc)
    return BatteryResult(results=results, failures=failures)
