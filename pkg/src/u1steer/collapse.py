"""Single-parameter scaling collapse by grid search.

Curves y_L(p) for several system sizes are shifted by their interpolated
value at a candidate p_c, mapped onto the scaling variable
x = (p - p_c) L^(1/nu), resampled by linear interpolation onto a common
x grid inside a window around zero, and scored by the squared deviation
from the per-x cross-size mean. The optimum of the (p_c, nu) grid is the
collapse estimate of the critical point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EmptyWindowError",
    "AnalysisFailedError",
    "CollapseInput",
    "CollapseResult",
    "collapse_cost",
    "grid_search",
    "collapse_scatter",
    "select_half_parity",
]

DEFAULT_WINDOW = 0.05
DEFAULT_X_POINTS = 101


class EmptyWindowError(ValueError):
    """The collapse window has no data support for at least one system size."""


class AnalysisFailedError(RuntimeError):
    """Every grid point failed to produce a finite cost."""


@dataclass(frozen=True)
class CollapseInput:
    """Family of same-grid curves, one per system size."""

    rates: np.ndarray                      # common, strictly increasing p grid
    curves: dict[int, np.ndarray]          # system size -> y values on the grid
    errors: dict[int, np.ndarray] | None = None  # optional per-point sigmas
    window: float = DEFAULT_WINDOW
    label: str = "fluctuation"

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=np.float64)
        object.__setattr__(self, "rates", rates)
        if len(self.curves) < 2:
            raise ValueError(f"need curves for at least 2 system sizes, got {len(self.curves)}")
        if rates.ndim != 1 or rates.size < 3 or np.any(np.diff(rates) <= 0):
            raise ValueError("rates must be a strictly increasing grid of at least 3 points")
        for L, y in self.curves.items():
            if np.asarray(y).shape != rates.shape:
                raise ValueError(f"curve for L={L} does not match the rate grid")
        if not 0 < self.window < 1:
            raise ValueError(f"window fraction must be in (0, 1), got {self.window}")

    @property
    def sizes(self) -> list[int]:
        return sorted(self.curves)


def select_half_parity(curves: dict[int, np.ndarray], parity: str) -> dict[int, np.ndarray]:
    """Keep the sizes whose half length L/2 is odd or even.

    Odd half lengths bypass the even/odd offset of the last gate layer, so
    collapses are typically run on one parity class at a time.
    """
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    want = 1 if parity == "odd" else 0
    return {L: y for L, y in curves.items() if (L // 2) % 2 == want}


def _shifted_scaled(
    data: CollapseInput, critical_rate: float, nu: float
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    rates = data.rates
    if not rates[0] <= critical_rate <= rates[-1]:
        raise EmptyWindowError(
            f"candidate critical rate {critical_rate} lies outside the data grid"
        )
    out = {}
    for L, y in data.curves.items():
        y = np.asarray(y, dtype=np.float64)
        shift = float(np.interp(critical_rate, rates, y))
        x = (rates - critical_rate) * L ** (1.0 / nu)
        out[L] = (x, y - shift)
    return out


def collapse_cost(
    data: CollapseInput,
    critical_rate: float,
    nu: float,
    n_x: int = DEFAULT_X_POINTS,
) -> float:
    """Squared cross-size spread of the shifted curves inside the window.

    The window is |x| <= w * min_L L^(1/nu); each curve is linearly
    interpolated onto n_x common points, and the cost sums the squared
    deviations from the per-point mean over sizes. The cost grows
    proportionally to n_x; divide by n_x for a density-normalized figure.
    """
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    shifted = _shifted_scaled(data, critical_rate, nu)
    x_half = data.window * min(L ** (1.0 / nu) for L in shifted)
    xs = np.linspace(-x_half, x_half, n_x)
    resampled = np.empty((len(shifted), n_x))
    slack = 1e-9 * x_half  # tolerate 1-ulp shortfall of a nominally covering grid
    for i, L in enumerate(sorted(shifted)):
        x, y = shifted[L]
        if x[0] > -x_half + slack or x[-1] < x_half - slack:
            raise EmptyWindowError(
                f"curve for L={L} does not cover the window [-{x_half:.4g}, {x_half:.4g}]"
            )
        resampled[i] = np.interp(xs, x, y)
    mean = resampled.mean(axis=0)
    return float(np.sum((resampled - mean) ** 2))


@dataclass(frozen=True)
class CollapseResult:
    """Grid of collapse costs with the located optimum."""

    pc_values: np.ndarray
    nu_values: np.ndarray
    cost: np.ndarray                 # shape (len(pc_values), len(nu_values)), NaN where failed
    optimum: tuple[float, float]
    optimum_cost: float
    scatter: list[tuple[float, float, int]] = field(repr=False, default_factory=list)

    def heatmap_rows(self) -> list[tuple[float, float, float, float]]:
        """(p_c, nu, C, 1/C) rows for export; failed points are skipped."""
        rows = []
        for i, pc in enumerate(self.pc_values):
            for k, nu in enumerate(self.nu_values):
                c = self.cost[i, k]
                if math.isnan(c):
                    continue
                rows.append((float(pc), float(nu), float(c), float(1.0 / c) if c > 0 else math.inf))
        return rows


def grid_search(
    data: CollapseInput,
    pc_values,
    nu_values,
    n_x: int = DEFAULT_X_POINTS,
) -> CollapseResult:
    """Evaluate the collapse cost on a (p_c, nu) grid and locate its minimum.

    Ties are broken toward the smallest p_c, then the smallest nu. Grid
    points whose window is unsupported are skipped; if every point fails,
    the analysis fails.
    """
    pc_values = np.asarray(pc_values, dtype=np.float64)
    nu_values = np.asarray(nu_values, dtype=np.float64)
    if pc_values.size == 0 or nu_values.size == 0:
        raise ValueError("parameter grids must be non-empty")
    cost = np.full((pc_values.size, nu_values.size), np.nan)
    best: tuple[float, float] | None = None
    best_cost = math.inf
    for i, pc in enumerate(pc_values):
        for k, nu in enumerate(nu_values):
            try:
                c = collapse_cost(data, float(pc), float(nu), n_x)
            except EmptyWindowError:
                continue
            cost[i, k] = c
            if c < best_cost:
                best_cost = c
                best = (float(pc), float(nu))
    if best is None:
        raise AnalysisFailedError("no (p_c, nu) grid point had a supported collapse window")
    scatter = collapse_scatter(data, best[0], best[1])
    return CollapseResult(
        pc_values=pc_values,
        nu_values=nu_values,
        cost=cost,
        optimum=best,
        optimum_cost=best_cost,
        scatter=scatter,
    )


def collapse_scatter(
    data: CollapseInput, critical_rate: float, nu: float
) -> list[tuple[float, float, int]]:
    """Full-range collapse coordinates (x, shifted y, L) for plotting or export."""
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    shifted = _shifted_scaled(data, critical_rate, nu)
    points = []
    for L in sorted(shifted):
        x, y = shifted[L]
        points.extend((float(xi), float(yi), L) for xi, yi in zip(x, y))
    return points
