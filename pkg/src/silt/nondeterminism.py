"""Diagnostics for strong local nondeterminism and Berman's local version.

Ratios are computed on normalized increments (the Gram-determinant
reduction), which stays well conditioned at small gaps; scans drive the
chosen gaps toward zero and report whether the defining limits are reached
at a stated tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import DegenerateConfigurationError, ValidationError
from .function_space import GridFunction, inner
from .gram import TimeTuple
from .process_models import ProcessModel

DEFAULT_SCAN_TOL = 0.05


@dataclass(frozen=True)
class SLNDReport:
    """Gap scan of the strong-local-nondeterminism ratio."""

    gaps: Tuple[float, ...]
    ratios: Tuple[float, ...]
    limit_reached: bool


def _normalized_increments(model: ProcessModel, times: Sequence[float]) -> np.ndarray:
    E = model.embedded_factors(np.asarray(times, dtype=float))
    inc = np.diff(E, axis=0)
    norms = np.linalg.norm(inc, axis=1)
    if np.any(norms == 0):
        raise DegenerateConfigurationError("zero-norm increment in tuple")
    return inc / norms[:, None]


def _gram_det(rows: np.ndarray) -> float:
    if rows.shape[0] == 0:
        return 1.0
    G = rows @ rows.T
    try:
        c = np.linalg.cholesky((G + G.T) / 2.0)
    except np.linalg.LinAlgError:
        raise DegenerateConfigurationError(
            "Gram matrix of normalized vectors is numerically singular"
        ) from None
    return float(np.prod(np.diag(c)) ** 2)


def slnd_ratio(model: ProcessModel, tt: TimeTuple, M: Iterable[int]) -> float:
    """Gamma / (complement Gram determinant * product of squared norms over M).

    Computed as G(all normalized) / G(complement normalized); the Gram
    determinant of an empty family is 1, so M = full set is allowed and
    M = empty set returns 1 by convention.
    """
    k1 = tt.k - 1
    M = sorted(set(int(i) for i in M))
    if any(i < 1 or i > k1 for i in M):
        raise ValidationError(f"subset {M} out of range 1..{k1}")
    if not M:
        return 1.0
    U = _normalized_increments(model, tt.times)
    comp = [i - 1 for i in range(1, k1 + 1) if i not in M]
    return _gram_det(U) / _gram_det(U[comp])


def conditional_variance_ratio(model: ProcessModel, tt: TimeTuple, i: int) -> float:
    """Var(dx(t_i) | other increments) / Var(dx(t_i)); identical to slnd_ratio({i})."""
    return slnd_ratio(model, tt, {i})


def _scan_times(base_tt: TimeTuple, M: Sequence[int], gap: float) -> np.ndarray:
    base_gaps = np.diff(np.asarray(base_tt.times))
    new_gaps = base_gaps.copy()
    for i in M:
        new_gaps[i - 1] = gap
    return np.concatenate(
        [[base_tt.times[0]], base_tt.times[0] + np.cumsum(new_gaps)]
    )


def slnd_scan(
    model: ProcessModel,
    base_tt: TimeTuple,
    M: Iterable[int],
    gap_sequence: Sequence[float],
    tol: float = DEFAULT_SCAN_TOL,
) -> SLNDReport:
    """Shrink the M-indexed gaps toward their left endpoints and record ratios."""
    M = sorted(set(int(i) for i in M))
    gap_sequence = [float(g) for g in gap_sequence]
    if any(g2 >= g1 for g1, g2 in zip(gap_sequence, gap_sequence[1:])):
        raise ValidationError("gap sequence must be strictly decreasing")
    ratios = []
    for g in gap_sequence:
        times = _scan_times(base_tt, M, g)
        if times[-1] > model.grid.T + 1e-12:
            raise ValidationError(
                f"scanned tuple at gap {g} leaves the interval [0, {model.grid.T}]"
            )
        tt = TimeTuple(times, min_gap=min(g / 2, 1e-9))
        ratios.append(slnd_ratio(model, tt, M))
    limit = abs(ratios[-1] - 1.0) < tol
    return SLNDReport(tuple(gap_sequence), tuple(ratios), limit)


def berman_stat(model: ProcessModel, tt: TimeTuple) -> float:
    """Gram determinant of the normalized value x(t_1) and normalized increments."""
    times = np.asarray(tt.times)
    E = model.embedded_factors(times)
    first = E[0]
    n0 = np.linalg.norm(first)
    if n0 == 0:
        raise DegenerateConfigurationError("Var x(t_1) = 0; choose t_1 > 0")
    inc = np.diff(E, axis=0)
    norms = np.linalg.norm(inc, axis=1)
    if np.any(norms == 0):
        raise DegenerateConfigurationError("zero-variance increment in tuple")
    rows = np.vstack([first / n0, inc / norms[:, None]])
    return _gram_det(rows)


def berman_scan(
    model: ProcessModel,
    t1: float,
    m: int,
    window_sequence: Sequence[float],
    tol: float = DEFAULT_SCAN_TOL,
) -> SLNDReport:
    """Berman statistic for m equispaced points in a shrinking window after t_1.

    ``passes at tolerance tol`` means the statistic is within tol of its
    limit 1 at the smallest window; the infimum over all tuples in Berman's
    definition is not computable and is not claimed.
    """
    window_sequence = [float(wdw) for wdw in window_sequence]
    if any(w2 >= w1 for w1, w2 in zip(window_sequence, window_sequence[1:])):
        raise ValidationError("window sequence must be strictly decreasing")
    stats = []
    for wdw in window_sequence:
        times = t1 + np.linspace(0.0, wdw, m)
        if times[-1] > model.grid.T + 1e-12:
            raise ValidationError("window leaves the model interval")
        tt = TimeTuple(times, min_gap=min(wdw / (2 * m), 1e-9))
        stats.append(berman_stat(model, tt))
    limit = abs(stats[-1] - 1.0) < tol
    return SLNDReport(tuple(window_sequence), tuple(stats), limit)


def projection_decay(
    model: ProcessModel, t1: float, t2: float, h: GridFunction
) -> float:
    """|(h, dg)| / ||dg|| for the increment on [t1, t2] (= ||P_{t1 t2} h||)."""
    if not t1 < t2:
        raise ValidationError("need t1 < t2")
    dg = model.factor(t2) - model.factor(t1)
    nrm = dg.norm()
    if nrm == 0:
        raise DegenerateConfigurationError(f"zero increment on [{t1}, {t2}]")
    return abs(inner(h, dg)) / nrm


def point_projection_norm_sq(model: ProcessModel, t1: float, h: GridFunction) -> float:
    """||projection of h on g(t1)||^2 = (h, g(t1))^2 / ||g(t1)||^2."""
    g = model.factor(t1)
    nsq = g.norm_sq()
    if nsq == 0:
        raise DegenerateConfigurationError("g(t1) = 0; choose t1 > 0")
    return inner(h, g) ** 2 / nsq
