"""Named Gaussian process models given by their factor map t -> g(t).

Every process is represented through its factor map: x(t) = ((g(t),xi1),
(g(t),xi2)) for white noises xi, so covariances and all Gram machinery
reduce to inner products of factors.  Models carry a vectorized
``factor_values`` used by the quadrature engine.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import ValidationError
from .function_space import (
    Grid,
    GridFunction,
    KernelOperator,
    GridMismatchError,
    indicator_values,
    inner,
    operator_norm,
)

_SL_ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class ProcessModel:
    """A process x(t) = (g(t), xi) described by its factor map g."""

    name: str
    grid: Grid
    aux_dim: int
    _values: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]

    def factor_values(self, times) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorized factor map: (B,) times -> grid values (B,n), aux (B,m)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times < -1e-12) or np.any(times > self.grid.T + 1e-12):
            raise ValidationError(f"model time outside [0, {self.grid.T}]")
        return self._values(np.clip(times, 0.0, self.grid.T))

    def factor(self, t: float) -> GridFunction:
        V, X = self.factor_values([t])
        return GridFunction(self.grid, V[0], X[0])

    def embedded_factors(self, times) -> np.ndarray:
        """Euclidean embeddings of g(t) for an array of times, shape (B, n+m)."""
        V, X = self.factor_values(times)
        return np.concatenate([V * math.sqrt(self.grid.weight), X], axis=1)


def wiener_model(grid: Grid) -> ProcessModel:
    """Planar Wiener process: g(t) = 1I_[0,t]."""

    def values(ts):
        return indicator_values(grid, ts), np.zeros((len(ts), 0))

    return ProcessModel("wiener", grid, 0, values)


def perturbed_model(grid: Grid, S: KernelOperator, name: str = "perturbed") -> ProcessModel:
    """Compact perturbation of the Wiener process: g(t) = (I+S) 1I_[0,t].

    Requires ||S|| < 1 (checked on the discretization); norms in [0.95, 1)
    only warn, at or above 1 the model is rejected.
    """
    if S.grid != grid:
        raise GridMismatchError("perturbation operator lives on a different grid")
    nrm = operator_norm(S)
    if nrm >= 1.0:
        raise ValidationError(
            f"perturbation norm {nrm:.6f} >= 1; I+S has no continuous inverse"
        )
    if nrm >= 0.95:
        warnings.warn(
            f"perturbation norm {nrm:.6f} is close to 1; results may be fragile",
            stacklevel=2,
        )

    M = S.matrix

    def values(ts):
        ind = indicator_values(grid, ts)
        return ind + ind @ M.T, np.zeros((len(ts), 0))

    return ProcessModel(name, grid, 0, values)


def sturm_liouville_operator(grid: Grid) -> KernelOperator:
    """The compact operator S whose action on indicators is the Green solution.

    Kernel: k(s,u) = -cos u cos s for u < s and sin u sin s for u >= s, so
    that (S 1I_[0,t])(s) = -cos t sin s for s < t and -sin t cos s for s > t.
    """
    if abs(grid.T - math.pi / 2) > _SL_ENDPOINT_TOL:
        raise ValidationError(
            f"Sturm-Liouville operator needs the interval [0, pi/2], got T={grid.T}"
        )

    def kernel(s, u):
        return np.where(u >= s, np.sin(u) * np.sin(s), -np.cos(u) * np.cos(s))

    return KernelOperator.from_kernel(grid, kernel)


def sturm_liouville_green(grid: Grid) -> KernelOperator:
    """Green operator of u'' + u = f, u(0) = u(pi/2) = 0 (symmetric kernel)."""
    if abs(grid.T - math.pi / 2) > _SL_ENDPOINT_TOL:
        raise ValidationError(
            f"Green operator needs the interval [0, pi/2], got T={grid.T}"
        )

    def kernel(t, s):
        return np.where(s < t, -np.cos(t) * np.sin(s), -np.sin(t) * np.cos(s))

    return KernelOperator.from_kernel(grid, kernel)


def sl_factor_correction(grid: Grid, ts: np.ndarray) -> np.ndarray:
    """(S 1I_[0,t]) evaluated in closed form on the grid nodes, shape (B, n)."""
    u = grid.nodes[None, :]
    t = np.asarray(ts, dtype=float)[:, None]
    return np.where(u < t, -np.cos(t) * np.sin(u), -np.sin(t) * np.cos(u))


def sturm_liouville_model(grid: Grid) -> ProcessModel:
    """perturbed:sl model with the closed-form factor map.

    Uses the analytic expression for S 1I_[0,t] node-wise, so it stays cheap
    and accurate on very fine grids where the n x n kernel matrix would not
    fit.  The operator norm precondition is checked on a moderate grid.
    """
    if abs(grid.T - math.pi / 2) > _SL_ENDPOINT_TOL:
        raise ValidationError(
            f"perturbed:sl needs the interval [0, pi/2], got T={grid.T}"
        )
    probe = grid if grid.n <= 600 else Grid(grid.T, 600)
    nrm = operator_norm(sturm_liouville_operator(probe))
    if nrm >= 1.0:
        raise ValidationError(f"perturbation norm {nrm:.6f} >= 1")

    def values(ts):
        return (
            indicator_values(grid, ts) + sl_factor_correction(grid, ts),
            np.zeros((len(ts), 0)),
        )

    return ProcessModel("perturbed:sl", grid, 0, values)


def counterexample_model(grid: Grid) -> ProcessModel:
    """x(t) = w(t) + sqrt(t) xi: grid part 1I_[0,t], one aux coordinate sqrt(t)."""

    def values(ts):
        return indicator_values(grid, ts), np.sqrt(ts)[:, None]

    return ProcessModel("counterexample", grid, 1, values)


def covariance(model: ProcessModel, s: float, t: float) -> float:
    """Cov(x(s), x(t)) per planar coordinate = (g(s), g(t))."""
    return inner(model.factor(s), model.factor(t))


def load_kernel_csv(grid: Grid, path: str) -> KernelOperator:
    """Kernel CSV: rows s,u,value on grid nodes; missing entries are zero."""
    nodes = grid.nodes
    w = grid.weight
    M = np.zeros((grid.n, grid.n))
    with open(path, newline="") as fh:
        import csv as _csv

        reader = _csv.reader(fh)
        for row in reader:
            if not row or row[0].strip() in ("s", ""):
                continue
            try:
                s, u, v = float(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise ValidationError(f"bad kernel CSV row {row!r}") from exc
            i = int(round(s / w - 0.5))
            j = int(round(u / w - 0.5))
            if not (0 <= i < grid.n and abs(nodes[i] - s) < 1e-9 * max(1, grid.T)):
                raise ValidationError(f"kernel CSV point s={s} is not a grid node")
            if not (0 <= j < grid.n and abs(nodes[j] - u) < 1e-9 * max(1, grid.T)):
                raise ValidationError(f"kernel CSV point u={u} is not a grid node")
            M[i, j] = v * w
    return KernelOperator(grid, M)


def parse_model(spec: str, grid: Grid) -> ProcessModel:
    """Model selection string: wiener | perturbed:sl | perturbed:file=<csv> | counterexample."""
    if spec == "wiener":
        return wiener_model(grid)
    if spec == "counterexample":
        return counterexample_model(grid)
    if spec == "perturbed:sl":
        return sturm_liouville_model(grid)
    if spec.startswith("perturbed:file="):
        path = spec[len("perturbed:file="):]
        return perturbed_model(grid, load_kernel_csv(grid, path), name=spec)
    raise ValidationError(f"unknown model spec '{spec}'")
