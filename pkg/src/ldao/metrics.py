"""Regression metrics, relevance functions, SERA and the Wilcoxon signed-rank test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm, rankdata

from .core import ValidationError


class LengthMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class ZeroSpread(ValidationError):
    pass


class TooFewPairs(ValidationError):
    pass


def _pair(y_true, y_pred):
    a = np.asarray(y_true, dtype=np.float64).ravel()
    b = np.asarray(y_pred, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    if a.size == 0:
        raise EmptyInput("no values")
    return a, b


def rmse(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def mae(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    return float(np.mean(np.abs(a - b)))


# ---------------------------------------------------------------------------
# relevance


def _limit_slopes(x, v, m):
    """Fritsch-Carlson limiting so each Hermite segment stays monotone."""
    m = m.copy()
    for i in range(len(x) - 1):
        delta = (v[i + 1] - v[i]) / (x[i + 1] - x[i])
        if delta == 0:
            m[i] = m[i + 1] = 0.0
            continue
        if np.sign(m[i]) == -np.sign(delta):
            m[i] = 0.0
        if np.sign(m[i + 1]) == -np.sign(delta):
            m[i + 1] = 0.0
        a, b = m[i] / delta, m[i + 1] / delta
        r = a * a + b * b
        if r > 9:
            t = 3.0 / math.sqrt(r)
            m[i], m[i + 1] = t * a * delta, t * b * delta
    return m


@dataclass(frozen=True)
class RelevanceFunction:
    """Piecewise-cubic Hermite map from target values to [0, 1].

    Constant beyond the outermost control points. Slopes are limited so
    every segment is monotone and values never leave the range of the
    control values.
    """

    y: np.ndarray
    phi: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        phi = np.asarray(self.phi, dtype=np.float64)
        slopes = np.asarray(self.slopes, dtype=np.float64)
        if not (y.ndim == 1 and y.size >= 1 and phi.shape == y.shape == slopes.shape):
            raise ValidationError("control points need matching y, phi, slope vectors")
        if np.any(np.diff(y) <= 0):
            raise ValidationError("control point y values must be strictly increasing")
        if np.any((phi < 0) | (phi > 1)):
            raise ValidationError("relevance values must lie in [0, 1]")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "slopes", _limit_slopes(y, phi, slopes) if y.size > 1 else slopes)

    @classmethod
    def constant(cls, value: float = 1.0) -> "RelevanceFunction":
        return cls(np.array([0.0]), np.array([value]), np.array([0.0]))

    @classmethod
    def from_file(cls, path) -> "RelevanceFunction":
        """Read control points, one ``y phi slope`` line each; ``#`` starts a comment."""
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.replace(",", " ").split()
                if len(parts) != 3:
                    raise ValidationError(f"{path}:{lineno}: expected 'y phi slope'")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: non-numeric control point") from None
        if not rows:
            raise ValidationError(f"{path}: no control points")
        rows.sort(key=lambda r: r[0])
        a = np.array(rows)
        return cls(a[:, 0], a[:, 1], a[:, 2])

    def __call__(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=np.float64)
        x, p, m = self.y, self.phi, self.slopes
        out = np.empty(v.shape)
        out[v <= x[0]] = p[0]
        out[v >= x[-1]] = p[-1]
        inner = (v > x[0]) & (v < x[-1])
        if inner.any():
            vi = v[inner]
            i = np.clip(np.searchsorted(x, vi, side="right") - 1, 0, len(x) - 2)
            h = x[i + 1] - x[i]
            t = (vi - x[i]) / h
            t2, t3 = t * t, t * t * t
            val = ((2 * t3 - 3 * t2 + 1) * p[i] + (t3 - 2 * t2 + t) * h * m[i]
                   + (-2 * t3 + 3 * t2) * p[i + 1] + (t3 - t2) * h * m[i + 1])
            out[inner] = np.clip(val, np.minimum(p[i], p[i + 1]), np.maximum(p[i], p[i + 1]))
        # exact values at the knots
        hit = np.isin(v, x)
        if hit.any():
            out[hit] = p[np.searchsorted(x, v[hit])]
        return out


def build_relevance(y) -> RelevanceFunction:
    """Boxplot relevance: 0 at the median, 1 at the whisker fences.

    Fences are ``Q1 - 1.5 IQR`` and ``Q3 + 1.5 IQR``, pulled in to the
    observed minimum/maximum when no value lies beyond them. All slopes are
    zero, which makes each side a monotone smoothstep.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size < 5:
        raise ValidationError("need at least 5 target values to build a relevance function")
    if np.ptp(y) == 0:
        raise ZeroSpread("all target values are equal")
    q1, med, q3 = np.percentile(y, [25, 50, 75])
    iqr = q3 - q1
    lo = max(q1 - 1.5 * iqr, y.min())
    hi = min(q3 + 1.5 * iqr, y.max())
    xs, ps = [], []
    if lo < med:
        xs.append(lo)
        ps.append(1.0)
    xs.append(med)
    ps.append(0.0)
    if hi > med:
        xs.append(hi)
        ps.append(1.0)
    return RelevanceFunction(np.array(xs), np.array(ps), np.zeros(len(xs)))


def sera(y_true, y_pred, relevance: RelevanceFunction | np.ndarray | None = None,
         step: float = 0.001) -> float:
    """Squared error-relevance area by the trapezoid rule over thresholds.

    ``relevance`` may be a RelevanceFunction, precomputed relevance values
    for ``y_true``, or None to build the boxplot relevance from ``y_true``.
    """
    a, b = _pair(y_true, y_pred)
    if not 0 < step <= 0.5:
        raise ValidationError("integration step must lie in (0, 0.5]")
    if relevance is None:
        relevance = build_relevance(a)
    phi = relevance(a) if callable(relevance) else np.asarray(relevance, dtype=np.float64)
    if phi.shape != a.shape:
        raise LengthMismatch("relevance vector length differs from targets")
    sq = (b - a) ** 2
    order = np.argsort(phi, kind="stable")
    phi_sorted = phi[order]
    # tail[i] = sum of sq over points with phi >= phi_sorted[i]
    tail = np.concatenate([np.cumsum(sq[order][::-1])[::-1], [0.0]])
    m = max(1, int(math.ceil(1.0 / step - 1e-9)))
    ts = np.linspace(0.0, 1.0, m + 1)
    ser = tail[np.searchsorted(phi_sorted, ts, side="left")]
    return float(np.sum((ser[1:] + ser[:-1]) * np.diff(ts)) / 2.0)


def sera_closed_form(y_true, y_pred, phi) -> float:
    a, b = _pair(y_true, y_pred)
    w = phi(a) if callable(phi) else np.asarray(phi, dtype=np.float64)
    return float(np.sum((b - a) ** 2 * w))


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank


@dataclass(frozen=True)
class WilcoxonResult:
    """``statistic`` is min(W+, W-) over differences ``a - b``. ``winner`` is
    the side with the smaller values ("a" or "b"), None on a rank tie."""

    statistic: float
    p_value: float
    significant: bool
    w_plus: float
    w_minus: float
    n: int
    method: str

    @property
    def winner(self) -> str | None:
        if self.w_plus == self.w_minus:
            return None
        return "a" if self.w_plus < self.w_minus else "b"

    def __iter__(self):
        return iter((self.statistic, self.p_value, self.significant))


EXACT_MAX_N = 20


def _exact_counts(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Number of sign patterns giving each value of 2*W+ (integer ranks x2)."""
    total = int(sum(doubled_ranks))
    counts = [0] * (total + 1)
    counts[0] = 1
    top = 0
    for r in doubled_ranks:
        for s in range(top, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
        top += r
    return counts


def wilcoxon_signed_rank(a, b=None, alpha: float = 0.05, method: str = "auto") -> WilcoxonResult:
    """Two-sided paired test on ``a - b``.

    Zero differences are dropped; tied magnitudes share average ranks. For
    ``n <= 20`` the p-value comes from the exact permutation distribution,
    above that from the normal approximation with continuity and tie
    corrections. ``method`` forces "exact" or "normal".
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    d = a if b is None else a - np.asarray(b, dtype=np.float64).ravel()
    if b is not None and a.shape != np.asarray(b).ravel().shape:
        raise LengthMismatch("paired vectors differ in length")
    if not np.isfinite(d).all():
        raise ValidationError("paired results must be finite")
    d = d[d != 0]
    n = d.size
    if n < 5:
        raise TooFewPairs(f"{n} non-zero differences; need at least 5")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal"
    if method == "exact":
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _exact_counts(doubled)
        obs = int(round(2 * w_plus))
        total = 2 ** n
        lower = sum(counts[: obs + 1])
        upper = sum(counts[obs:])
        p = min(1.0, 2 * min(lower, upper) / total)
    elif method == "normal":
        mu = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
        z = max(0.0, abs(w_plus - mu) - 0.5) / math.sqrt(var)
        p = min(1.0, 2.0 * float(norm.sf(z)))
    else:
        raise ValidationError(f"unknown method {method!r}")
    return WilcoxonResult(statistic=min(w_plus, w_minus), p_value=p, significant=p < alpha,
                          w_plus=w_plus, w_minus=w_minus, n=n, method=method)
