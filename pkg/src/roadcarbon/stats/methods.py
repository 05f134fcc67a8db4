"""
Classical tests and fits used on the project corpus, written against numpy only.

p-values come from :mod:`.distributions`. Inputs are plain sequences or
arrays; degenerate inputs raise :class:`DegenerateInputError` rather than
returning meaningless numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from ..errors import DegenerateInputError, DomainError, RankDeficiencyError
from .distributions import f_upper_p, t_two_sided_p

__all__ = [
    "PearsonResult",
    "OLSResult",
    "PCAResult",
    "PairwiseComparison",
    "TestReport",
    "ModelFit",
    "LinearityReport",
    "pearson",
    "ols_vif",
    "pca",
    "t_test_independent",
    "t_test_paired",
    "anova_bonferroni",
    "bonferroni",
    "linearity_report",
]

VIF_THRESHOLD = 10.0
# relative singular-value cut-off for declaring columns dependent
_RANK_TOL = 1e-9


def _vector(x, name="x") -> np.ndarray:
    a = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite values")
    return a


# ---------------------------------------------------------------------------
# correlation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PearsonResult:
    r: float
    p_value: float
    n: int

    @property
    def df(self) -> int:
        return self.n - 2


def pearson(x, y) -> PearsonResult:
    x = _vector(x, "x")
    y = _vector(y, "y")
    if x.size != y.size:
        raise DomainError("x and y must have equal length")
    n = x.size
    if n < 3:
        raise DegenerateInputError("Pearson correlation needs at least 3 pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("zero variance in pearson input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0:
        return PearsonResult(r, 0.0, n)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return PearsonResult(r, t_two_sided_p(t, n - 2), n)


# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OLSResult:
    names: tuple[str, ...]
    intercept: float
    coefficients: tuple[float, ...]
    r_squared: float
    residuals: np.ndarray = field(repr=False)
    vif: Mapping[str, float] = field(default_factory=dict)
    flagged: tuple[str, ...] = ()
    threshold: float = VIF_THRESHOLD


def _columns(X, names=None) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(X, Mapping):
        names = tuple(X)
        cols = [_vector(X[k], k) for k in names]
        if len({c.size for c in cols}) > 1:
            raise DomainError("predictor columns differ in length")
        M = np.column_stack(cols) if cols else np.empty((0, 0))
    else:
        M = np.asarray(X, dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        if not np.all(np.isfinite(M)):
            raise DomainError("predictors contain non-finite values")
        names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(M.shape[1]))
    if len(names) != M.shape[1]:
        raise DomainError("one name per predictor column is required")
    return M, names


def _dependent_columns(M: np.ndarray, names: Sequence[str]) -> list[str]:
    """Columns that add no rank beyond the intercept and the columns before them."""
    centred = M - M.mean(axis=0)
    norms = np.linalg.norm(centred, axis=0)
    kept: list[np.ndarray] = []
    dependent = []
    for j, name in enumerate(names):
        if norms[j] == 0:
            dependent.append(name)
            continue
        col = centred[:, j] / norms[j]
        trial = np.column_stack(kept + [col])
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] <= _RANK_TOL * s[0]:
            dependent.append(name)
        else:
            kept.append(col)
    return dependent


def _normal_equations(M: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Intercept, slopes and residuals. Columns are standardised before forming X'X."""
    mu = M.mean(axis=0)
    sd = M.std(axis=0)
    Z = (M - mu) / sd
    A = np.column_stack([np.ones(len(y)), Z])
    beta_z = np.linalg.solve(A.T @ A, A.T @ y)
    slopes = beta_z[1:] / sd
    intercept = beta_z[0] - float(slopes @ mu)
    resid = y - A @ beta_z
    return intercept, slopes, resid


def _r_squared(y: np.ndarray, resid: np.ndarray) -> float:
    dy = y - y.mean()
    tss = float(dy @ dy)
    if tss == 0:
        raise DegenerateInputError("response has zero variance")
    return 1.0 - float(resid @ resid) / tss


def ols_vif(X, y, names: Sequence[str] | None = None, threshold: float = VIF_THRESHOLD) -> OLSResult:
    """OLS with intercept plus variance inflation factors for each predictor.

    VIF_j = 1 / (1 - R2_j), where R2_j regresses predictor j on the others;
    predictors with VIF above ``threshold`` are flagged.
    """
    M, names = _columns(X, names)
    y = _vector(y, "y")
    n, p = M.shape
    if y.size != n:
        raise DomainError("response length differs from predictors")
    if p == 0:
        raise DomainError("at least one predictor is required")
    if n <= p + 1:
        raise DegenerateInputError(f"need more than {p + 1} observations for {p} predictors, got {n}")
    dependent = _dependent_columns(M, names)
    if dependent:
        raise RankDeficiencyError(
            f"design matrix is rank deficient; dependent columns: {', '.join(dependent)}",
            tuple(dependent),
        )
    intercept, slopes, resid = _normal_equations(M, y)
    r2 = _r_squared(y, resid)
    vif = {}
    for j, name in enumerate(names):
        if p == 1:
            vif[name] = 1.0
            continue
        others = np.delete(M, j, axis=1)
        _, _, rj = _normal_equations(others, M[:, j])
        r2j = _r_squared(M[:, j], rj)
        vif[name] = math.inf if r2j >= 1.0 else 1.0 / (1.0 - r2j)
    flagged = tuple(k for k, v in vif.items() if v > threshold)
    return OLSResult(
        names=names,
        intercept=float(intercept),
        coefficients=tuple(float(b) for b in slopes),
        r_squared=r2,
        residuals=resid,
        vif=vif,
        flagged=flagged,
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# principal components
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PCAResult:
    names: tuple[str, ...]
    eigenvalues: np.ndarray
    components: np.ndarray  # columns are unit eigenvectors
    explained_variance_ratio: np.ndarray

    @property
    def loadings(self) -> np.ndarray:
        return self.components * np.sqrt(self.eigenvalues)


def correlation_matrix(M: np.ndarray, names: Sequence[str]) -> np.ndarray:
    sd = M.std(axis=0, ddof=1)
    for j, s in enumerate(sd):
        if s == 0:
            raise DegenerateInputError(f"column {names[j]!r} is constant")
    Z = (M - M.mean(axis=0)) / sd
    R = (Z.T @ Z) / (M.shape[0] - 1)
    np.fill_diagonal(R, 1.0)
    return (R + R.T) / 2


def pca(X, names: Sequence[str] | None = None) -> PCAResult:
    """Eigen-decomposition of the correlation matrix, largest component first."""
    M, names = _columns(X, names)
    n, p = M.shape
    if n < 2 or p < 2:
        raise DegenerateInputError("PCA needs at least 2 rows and 2 columns")
    R = correlation_matrix(M, names)
    vals, vecs = np.linalg.eigh(R)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    # sign convention: the largest-magnitude entry of each component is positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(p)])
    vecs = vecs * np.where(signs == 0, 1.0, signs)
    return PCAResult(names, vals, vecs, vals / vals.sum())


# ---------------------------------------------------------------------------
# group comparisons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairwiseComparison:
    group_a: str
    group_b: str
    mean_difference: float
    statistic: float
    p_value: float
    p_adjusted: float


@dataclass(frozen=True)
class TestReport:
    test: str
    statistic: float
    df: tuple[float, ...]
    p_value: float
    direction: int | None = None
    group_means: Mapping[str, float] = field(default_factory=dict)
    group_sizes: Mapping[str, int] = field(default_factory=dict)
    pairwise: tuple[PairwiseComparison, ...] = ()
    notes: tuple[str, ...] = ()
    degenerate: bool = False


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def t_test_independent(a, b, equal_var: bool = False, labels: tuple[str, str] = ("a", "b")) -> TestReport:
    """Two-sample t test, Welch by default. ``direction`` is sign(mean(a) - mean(b))."""
    a = _vector(a, "a")
    b = _vector(b, "b")
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise DegenerateInputError("each group needs at least 2 observations")
    ma, mb = float(a.mean()), float(b.mean())
    va, vb = float(a.var(ddof=1)), float(b.var(ddof=1))
    diff = ma - mb
    means = {labels[0]: ma, labels[1]: mb}
    sizes = {labels[0]: na, labels[1]: nb}
    name = "student_t" if equal_var else "welch_t"
    if va == 0 and vb == 0:
        df = float(na + nb - 2)
        if diff == 0:
            return TestReport(name, 0.0, (df,), 1.0, 0, means, sizes,
                              notes=("both groups constant with equal means",), degenerate=True)
        return TestReport(name, math.copysign(math.inf, diff), (df,), 0.0, _sign(diff), means, sizes,
                          notes=("both groups constant",), degenerate=True)
    if equal_var:
        df = float(na + nb - 2)
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    else:
        qa, qb = va / na, vb / nb
        se = math.sqrt(qa + qb)
        df = (qa + qb) ** 2 / (qa * qa / (na - 1) + qb * qb / (nb - 1))
    t = diff / se
    return TestReport(name, t, (df,), t_two_sided_p(t, df), _sign(diff), means, sizes)


def t_test_paired(a, b, labels: tuple[str, str] = ("a", "b")) -> TestReport:
    """Paired t test on ``a[i] - b[i]``; use when each pair shares everything but the factor."""
    a = _vector(a, "a")
    b = _vector(b, "b")
    if a.size != b.size:
        raise DomainError("paired samples differ in length")
    n = a.size
    if n < 2:
        raise DegenerateInputError("a paired test needs at least 2 pairs")
    d = a - b
    md = float(d.mean())
    vd = float(d.var(ddof=1))
    df = float(n - 1)
    means = {labels[0]: float(a.mean()), labels[1]: float(b.mean())}
    sizes = {labels[0]: n, labels[1]: n}
    if vd == 0:
        if md == 0:
            return TestReport("paired_t", 0.0, (df,), 1.0, 0, means, sizes,
                              notes=("all differences zero",), degenerate=True)
        return TestReport("paired_t", math.copysign(math.inf, md), (df,), 0.0, _sign(md), means, sizes,
                          notes=("constant non-zero difference",), degenerate=True)
    t = md / math.sqrt(vd / n)
    return TestReport("paired_t", t, (df,), t_two_sided_p(t, df), _sign(md), means, sizes)


def bonferroni(p_values: Sequence[float], m: int | None = None) -> list[float]:
    m = len(p_values) if m is None else m
    return [min(1.0, m * p) for p in p_values]


def anova_bonferroni(values, groups: Sequence[str], equal_var: bool = False) -> TestReport:
    """One-way ANOVA F test with Bonferroni-adjusted pairwise t tests.

    Groups with fewer than two members are dropped and noted. Pairs are
    ordered by sorted group label.
    """
    values = _vector(values, "values")
    labels = [str(g) for g in groups]
    if len(labels) != values.size:
        raise DomainError("values and groups differ in length")
    members: dict[str, list[float]] = {}
    for v, g in zip(values, labels):
        members.setdefault(g, []).append(v)
    notes = []
    kept = {}
    for g in sorted(members):
        if len(members[g]) < 2:
            notes.append(f"group {g!r} excluded: {len(members[g])} member(s)")
        else:
            kept[g] = np.asarray(members[g])
    if len(kept) < 2:
        raise DegenerateInputError("ANOVA needs at least two groups with two or more members")
    allv = np.concatenate(list(kept.values()))
    n, k = allv.size, len(kept)
    grand = allv.mean()
    means = {g: float(v.mean()) for g, v in kept.items()}
    sizes = {g: int(v.size) for g, v in kept.items()}
    ssb = math.fsum(v.size * (v.mean() - grand) ** 2 for v in kept.values())
    ssw = math.fsum(float(((v - v.mean()) ** 2).sum()) for v in kept.values())
    df1, df2 = k - 1, n - k
    degenerate = False
    if ssw == 0:
        degenerate = True
        if ssb == 0:
            f, p = 0.0, 1.0
            notes.append("all observations identical")
        else:
            f, p = math.inf, 0.0
            notes.append("zero within-group variance")
    else:
        f = (ssb / df1) / (ssw / df2)
        p = f_upper_p(f, df1, df2)

    pairs = list(combinations(sorted(kept), 2))
    m = len(pairs)
    comparisons = []
    for ga, gb in pairs:
        rep = t_test_independent(kept[ga], kept[gb], equal_var=equal_var, labels=(ga, gb))
        comparisons.append(
            PairwiseComparison(ga, gb, means[ga] - means[gb], rep.statistic, rep.p_value,
                               min(1.0, m * rep.p_value))
        )
    return TestReport("anova", f, (float(df1), float(df2)), p, None, means, sizes,
                      tuple(comparisons), tuple(notes), degenerate)


# ---------------------------------------------------------------------------
# linear versus non-linear fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelFit:
    model: str
    r_squared: float
    aic: float
    parameters: tuple[float, ...]


@dataclass(frozen=True)
class LinearityReport:
    fits: Mapping[str, ModelFit]
    verdict: str  # "linear-adequate" or "non-linear"
    best_model: str
    margin: float
    notes: tuple[str, ...] = ()


def _lstsq_fit(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, A @ coef


def _summarise(model, y, pred, coef) -> ModelFit:
    resid = y - pred
    rss = float(resid @ resid)
    n = y.size
    k = len(coef)
    r2 = _r_squared(y, resid)
    aic = n * math.log(max(rss, 1e-300) / n) + 2 * k
    return ModelFit(model, r2, aic, tuple(float(c) for c in coef))


def linearity_report(x, y, margin: float = 0.02) -> LinearityReport:
    """Compare y ~ x, log y ~ log x and y ~ x + x^2.

    All R2 values are measured on the original y scale (the log-log fit is
    back-transformed) so the three are comparable.
    """
    x = _vector(x, "x")
    y = _vector(y, "y")
    if x.size != y.size:
        raise DomainError("x and y must have equal length")
    if x.size < 4:
        raise DegenerateInputError("linearity comparison needs at least 4 points")
    if np.ptp(x) == 0:
        raise DegenerateInputError("x has zero variance")
    if np.ptp(y) == 0:
        raise DegenerateInputError("y has zero variance")
    # centring and scaling x keeps the quadratic design well conditioned
    u = (x - x.mean()) / x.std()
    ones = np.ones_like(u)
    fits = {}
    coef, pred = _lstsq_fit(np.column_stack([ones, u]), y)
    slope = coef[1] / x.std()
    fits["linear"] = _summarise("linear", y, pred, (coef[0] - slope * x.mean(), slope))
    coef, pred = _lstsq_fit(np.column_stack([ones, u, u * u]), y)
    fits["quadratic"] = _summarise("quadratic", y, pred, coef)
    notes = []
    if np.all(x > 0) and np.all(y > 0):
        lx, ly = np.log(x), np.log(y)
        coef, pred = _lstsq_fit(np.column_stack([ones, lx]), ly)
        fits["loglog"] = _summarise("loglog", y, np.exp(pred), (math.exp(coef[0]), coef[1]))
    else:
        notes.append("log-log fit skipped: non-positive values")
    best = max(fits.values(), key=lambda f: f.r_squared)
    if fits["linear"].r_squared >= best.r_squared - margin:
        return LinearityReport(fits, "linear-adequate", "linear", margin, tuple(notes))
    return LinearityReport(fits, "non-linear", best.model, margin, tuple(notes))
