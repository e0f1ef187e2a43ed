"""Statistical summaries over score tables.

Correlation matrices (Pearson and rank-based), ordinary least squares
with classical standard errors and optional year fixed effects, Gaussian
kernel density estimates, and grouped trend summaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sp_stats

from .errors import DataError, NumericalError


class RankDeficientError(NumericalError):
    """The design matrix has linearly dependent columns."""


class InsufficientObservationsError(DataError):
    """Fewer rows than coefficients to estimate."""


def rankdata(values: np.ndarray) -> np.ndarray:
    """Midranks (1-based); tied values share the average of their ranks."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    sorted_vals = values[order]
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.sum(xc * xc) * np.sum(yc * yc))
    if denom == 0.0:
        return float("nan")
    return float(np.sum(xc * yc) / denom)


def correlation_matrix(columns: dict[str, np.ndarray],
                       method: str = "pearson") -> tuple[list[str], np.ndarray]:
    """Pairwise correlations between named columns.

    Spearman is Pearson on midranks.  Entries involving a constant
    column are NaN; diagonal entries are exactly 1.
    """
    if method not in ("pearson", "spearman"):
        raise DataError(f"unknown correlation method: {method}")
    names = list(columns)
    if not names:
        raise DataError("no columns to correlate")
    n = {len(np.asarray(columns[k])) for k in names}
    if len(n) != 1:
        raise DataError("columns must share a length")
    data = {k: np.asarray(columns[k], dtype=float) for k in names}
    if method == "spearman":
        data = {k: rankdata(v) for k, v in data.items()}
    m = len(names)
    out = np.empty((m, m))
    for i in range(m):
        out[i, i] = 1.0
        for j in range(i + 1, m):
            r = _pearson(data[names[i]], data[names[j]])
            out[i, j] = out[j, i] = r
    return names, out


@dataclass
class RegressionResult:
    """OLS fit: coefficient vector with classical inference columns."""

    names: list[str]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    r_squared: float
    n_obs: int
    dof: int

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def se(self, name: str) -> float:
        return float(self.std_errors[self.names.index(name)])

    def pvalue(self, name: str) -> float:
        return float(self.p_values[self.names.index(name)])


def ols_fit(y: np.ndarray, X: np.ndarray, names: list[str],
            add_intercept: bool = True) -> RegressionResult:
    """Least squares via the normal equations with homoskedastic errors.

    Two-sided p-values come from the t distribution on the residual
    degrees of freedom.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if add_intercept:
        X = np.column_stack([np.ones(len(y)), X])
        names = ["intercept"] + list(names)
    else:
        names = list(names)
    n, k = X.shape
    if n <= k:
        raise InsufficientObservationsError(
            f"{n} observations cannot identify {k} coefficients")
    xtx = X.T @ X
    if np.linalg.matrix_rank(xtx) < k:
        raise RankDeficientError("design matrix is rank deficient")
    xtx_inv = np.linalg.inv(xtx)
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta
    dof = n - k
    sigma2 = float(resid @ resid) / dof
    se = np.sqrt(np.diag(xtx_inv) * sigma2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_vals = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    p_vals = 2.0 * sp_stats.t.sf(np.abs(t_vals), dof)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / tss if tss > 0 else 0.0
    return RegressionResult(names, beta, se, t_vals, p_vals, r2, n, dof)


def year_dummies(years: np.ndarray) -> tuple[np.ndarray, list[str]]:
    """Indicator columns for each year except the earliest (the baseline)."""
    years = np.asarray(years, dtype=int)
    levels = sorted(set(years.tolist()))
    if len(levels) < 2:
        return np.empty((len(years), 0)), []
    cols = []
    names = []
    for yr in levels[1:]:
        cols.append((years == yr).astype(float))
        names.append(f"year_{yr}")
    return np.column_stack(cols), names


def quality_regression(y: np.ndarray, tci: np.ndarray,
                       controls: dict[str, np.ndarray] | None = None,
                       years: np.ndarray | None = None) -> RegressionResult:
    """Outcome on the index, optional controls, and year fixed effects."""
    blocks = [np.asarray(tci, dtype=float)[:, None]]
    names = ["tci"]
    for cname, col in (controls or {}).items():
        blocks.append(np.asarray(col, dtype=float)[:, None])
        names.append(cname)
    if years is not None:
        dums, dnames = year_dummies(np.asarray(years))
        if dums.size:
            blocks.append(dums)
            names.extend(dnames)
    X = np.hstack(blocks)
    return ols_fit(y, X, names, add_intercept=True)


def silverman_bandwidth(values: np.ndarray) -> float:
    """Rule-of-thumb Gaussian bandwidth; robust to heavy tails via IQR."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise DataError("bandwidth needs at least two values")
    std = float(np.std(values, ddof=1))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    scale = min(std, iqr / 1.34) if iqr > 0 else std
    if scale <= 0:
        raise NumericalError("cannot estimate bandwidth for constant data")
    return 0.9 * scale * n ** (-0.2)


def kde_density(values: np.ndarray, grid: np.ndarray | None = None,
                bandwidth: float | None = None,
                grid_size: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density estimate on a grid.

    When no grid is given one is built spanning the data plus three
    bandwidths on each side.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DataError("no values for density estimate")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(values)
    if bandwidth <= 0:
        raise DataError("bandwidth must be positive")
    if grid is None:
        lo = values.min() - 3.0 * bandwidth
        hi = values.max() + 3.0 * bandwidth
        grid = np.linspace(lo, hi, grid_size)
    grid = np.asarray(grid, dtype=float)
    z = (grid[:, None] - values[None, :]) / bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (values.size * bandwidth *
                                               np.sqrt(2.0 * np.pi))
    return grid, dens


def welch_ttest(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Welch's unequal-variance t statistic and two-sided p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise DataError("each group needs at least two values")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    denom = np.sqrt(va + vb)
    if denom == 0:
        raise NumericalError("zero variance in both groups")
    t = (a.mean() - b.mean()) / denom
    dof = (va + vb) ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    p = 2.0 * sp_stats.t.sf(abs(t), dof)
    return float(t), float(p)


@dataclass
class TrendRow:
    group: str
    mean: float
    median: float
    count: int


def group_trend(values: np.ndarray, groups: list[str]) -> list[TrendRow]:
    """Mean, median, and count of a score by group label, sorted by group."""
    values = np.asarray(values, dtype=float)
    if len(groups) != values.size:
        raise DataError("values and groups must align")
    buckets: dict[str, list[float]] = {}
    for g, v in zip(groups, values):
        buckets.setdefault(str(g), []).append(float(v))
    rows = []
    for g in sorted(buckets):
        arr = np.asarray(buckets[g])
        rows.append(TrendRow(g, float(arr.mean()), float(np.median(arr)), arr.size))
    return rows
