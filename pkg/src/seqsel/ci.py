"""Conditional-independence query layer.

A single provider contract with two implementations: a partial-correlation
test with the Fisher transform over sample data, and an exact graph-based
oracle.  Providers are read-only after construction; the only mutable state
is an exact query counter, which the benchmark harness reads.
"""

from __future__ import annotations

import abc
import math
import threading
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.stats import norm

from .graph import SequentialCausalGraph

__all__ = [
    "Dataset",
    "CIQuery",
    "CITestResult",
    "CIProvider",
    "OracleProvider",
    "FisherZProvider",
    "DegenerateDataError",
    "correlation_matrix",
    "partial_correlation",
    "fisher_z_test",
]

_CONDITION_NUMBER_LIMIT = 1e12
_R_CLAMP = 1.0 - 1e-12


class DegenerateDataError(ValueError):
    """Raised when the data cannot support a correlation-based test."""


@dataclass(frozen=True)
class Dataset:
    """Dense sample matrix whose column order is the temporal order."""

    values: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array (samples x variables)")
        if values.shape[0] < 1:
            raise ValueError("need at least one sample")
        if values.shape[1] < 2:
            raise ValueError("need at least two variables")
        if not np.isfinite(values).all():
            raise ValueError("values contain non-finite entries")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != values.shape[1]:
                raise ValueError("column_names length does not match column count")
            object.__setattr__(self, "column_names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def names(self) -> tuple[str, ...]:
        if self.column_names is not None:
            return self.column_names
        return tuple(f"X{v}" for v in range(1, self.n_vars + 1))


@dataclass(frozen=True)
class CIQuery:
    """One conditional-independence question: i against j given a set."""

    i: int
    j: int
    conditioning: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        i, j = int(self.i), int(self.j)
        cond = tuple(sorted({int(v) for v in self.conditioning}))
        if i == j:
            raise ValueError("query endpoints must differ")
        if i in cond or j in cond:
            raise ValueError("query endpoints may not appear in the conditioning set")
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "conditioning", cond)


@dataclass(frozen=True)
class CITestResult:
    """Decision plus the statistics backing it (absent for the oracle)."""

    independent: bool
    statistic: float | None = None
    p_value: float | None = None
    partial_correlation: float | None = None


class CIProvider(abc.ABC):
    """Deterministic answerer of CI queries with an exact invocation counter."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._query_count = 0

    @property
    @abc.abstractmethod
    def n_vars(self) -> int:
        ...

    @property
    def query_count(self) -> int:
        with self._lock:
            return self._query_count

    def reset_query_count(self) -> None:
        with self._lock:
            self._query_count = 0

    def is_independent(self, query: CIQuery) -> CITestResult:
        n = self.n_vars
        for v in (query.i, query.j, *query.conditioning):
            if not 1 <= v <= n:
                raise ValueError(f"variable index {v} out of range 1..{n}")
        with self._lock:
            self._query_count += 1
        return self._evaluate(query)

    @abc.abstractmethod
    def _evaluate(self, query: CIQuery) -> CITestResult:
        ...


class OracleProvider(CIProvider):
    """Exact provider that reads independence off a ground-truth graph."""

    def __init__(self, graph: SequentialCausalGraph) -> None:
        super().__init__()
        self._graph = graph

    @property
    def n_vars(self) -> int:
        return self._graph.n_observed

    @property
    def graph(self) -> SequentialCausalGraph:
        return self._graph

    def _evaluate(self, query: CIQuery) -> CITestResult:
        independent = self._graph.d_separated(query.i, query.j, query.conditioning)
        return CITestResult(independent=independent)


class FisherZProvider(CIProvider):
    """Partial-correlation test over a dataset at significance level alpha.

    The correlation matrix is computed once; each query inverts the submatrix
    over the involved variables.  No multiple-testing correction is applied.
    """

    def __init__(self, dataset: Dataset, alpha: float = 0.05) -> None:
        super().__init__()
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        self._dataset = dataset
        self._alpha = float(alpha)
        self._corr = correlation_matrix(dataset)

    @property
    def n_vars(self) -> int:
        return self._dataset.n_vars

    @property
    def alpha(self) -> float:
        return self._alpha

    def _evaluate(self, query: CIQuery) -> CITestResult:
        a, b = sorted((query.i, query.j))
        r = partial_correlation(self._corr, a, b, query.conditioning)
        return fisher_z_test(r, self._dataset.n_samples, len(query.conditioning), self._alpha)


def correlation_matrix(data: Dataset) -> np.ndarray:
    """Pearson correlation matrix of the dataset columns."""
    if data.n_samples < 2:
        raise ValueError("need at least two samples for correlations")
    values = data.values
    stds = values.std(axis=0)
    zero = np.flatnonzero(stds == 0.0)
    if zero.size:
        cols = ", ".join(str(v + 1) for v in zero)
        raise DegenerateDataError(f"zero-variance column(s): {cols}")
    corr = np.corrcoef(values, rowvar=False)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def partial_correlation(corr: np.ndarray, i: int, j: int, conditioning: Iterable[int] = ()) -> float:
    """Partial correlation of variables i and j (1-based) given the set.

    Computed from the inverse of the correlation submatrix over the involved
    variables; with an empty conditioning set this is exactly ``corr[i, j]``.
    Near-singular submatrices are rejected rather than regularized so that
    collinear data fails loudly.
    """
    n = corr.shape[0]
    cond = sorted({int(v) for v in conditioning})
    for v in (i, j, *cond):
        if not 1 <= v <= n:
            raise ValueError(f"variable index {v} out of range 1..{n}")
    if i == j or i in cond or j in cond:
        raise ValueError("query endpoints must be distinct and outside the conditioning set")
    if not cond:
        return float(corr[i - 1, j - 1])
    idx = np.array([i - 1, j - 1] + [v - 1 for v in cond])
    sub = corr[np.ix_(idx, idx)]
    try:
        omega = np.linalg.inv(sub)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDataError(f"singular correlation submatrix for ({i},{j}|{cond})") from exc
    cond_estimate = np.abs(sub).sum(axis=0).max() * np.abs(omega).sum(axis=0).max()
    if not np.isfinite(cond_estimate) or cond_estimate > _CONDITION_NUMBER_LIMIT:
        raise DegenerateDataError(
            f"ill-conditioned correlation submatrix for ({i},{j}|{cond}): "
            f"condition estimate {cond_estimate:.3g}"
        )
    r = -omega[0, 1] / math.sqrt(omega[0, 0] * omega[1, 1])
    return float(min(1.0, max(-1.0, r)))


def fisher_z_test(r: float, n_samples: int, cond_size: int, alpha: float) -> CITestResult:
    """Decision on a partial correlation via the z-transform.

    statistic = sqrt(n - |Z| - 3) * |atanh(r)|, compared against the
    two-sided normal quantile at level alpha.  |r| = 1 is declared dependent
    with p-value 0; magnitudes are clamped just below 1 so floating-point
    round-off cannot produce an infinite transform.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    df = n_samples - cond_size - 3
    if df < 1:
        raise ValueError(
            f"insufficient samples: n={n_samples} with |Z|={cond_size} leaves {df} degrees of freedom"
        )
    if abs(r) >= 1.0:
        return CITestResult(
            independent=False,
            statistic=math.inf,
            p_value=0.0,
            partial_correlation=float(np.sign(r)),
        )
    r_eff = min(_R_CLAMP, max(-_R_CLAMP, float(r)))
    z = math.atanh(r_eff)
    statistic = math.sqrt(df) * abs(z)
    threshold = norm.ppf(1.0 - alpha / 2.0)
    p_value = float(2.0 * norm.sf(statistic))
    return CITestResult(
        independent=bool(statistic <= threshold),
        statistic=float(statistic),
        p_value=p_value,
        partial_correlation=float(r),
    )
