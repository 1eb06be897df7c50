"""Estimators that turn steered shot ensembles into postselected quantities.

The pipeline per target trajectory: filter the shots by total-charge
sector, take the sample variance of the subsystem charge inside the
sector, and only then average those variances over targets. Pooling raw
shots across targets first would pick up the spread of the target means
and is implemented only as an explicitly named foil for tests.

The steering corrections add an incoherent, volume-law contribution to the
sector-filtered fluctuations. Its per-length coefficient c_V is read off
from the difference between an even and an odd subsystem length, and the
area-law corrected value subtracts c_V * (L_s - 2); the offset reflects
that steering adds no fluctuations at L_s <= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuits import ShotRecord
from .state import StateVector, subsystem_charge_values

__all__ = [
    "InsufficientDataError",
    "FitDegenerateError",
    "SectorStats",
    "CurveCell",
    "FluctuationCurve",
    "filter_sector",
    "sample_variance",
    "pooled_variance_foil",
    "average_over_targets",
    "sector_stats",
    "extract_cv",
    "bootstrap_cv_error",
    "corrected_fluctuation",
    "smooth_step",
    "effective_fluctuation",
    "reconstruct_entropy",
    "fit_entropy_fluctuation_relation",
    "subsystem_charge_histogram",
    "total_variation_distance",
]

KNEE = 2.0  # charge variance where the entropy-fluctuation relation changes slope
HIGH_SLOPE = 2.0 * math.log(2.0)
DEFAULT_A = 0.92


class InsufficientDataError(ValueError):
    """Too few shots or targets for the requested estimate."""


class FitDegenerateError(ValueError):
    """Fit input does not span the regimes it is supposed to constrain."""


def filter_sector(shots: Sequence[ShotRecord], sector: int) -> list[ShotRecord]:
    """Keep the shots whose terminal total charge equals `sector`, in order."""
    return [s for s in shots if s.total_charge == sector]


def _charge_values(shots: Sequence[ShotRecord] | Sequence[float], block_size: int | None) -> np.ndarray:
    if block_size is None:
        return np.asarray(shots, dtype=np.float64)
    return np.array([s.subsystem_charge(block_size) for s in shots], dtype=np.float64)


def sample_variance(
    shots: Sequence[ShotRecord] | Sequence[float],
    block_size: int | None = None,
    unbiased: bool = False,
) -> float:
    """Sample variance of the subsystem charge over shots.

    With block_size None, `shots` is taken as raw charge values. The
    unbiased flag multiplies the mean-square deviation by n / (n - 1).
    """
    z = _charge_values(shots, block_size)
    if z.size < (2 if unbiased else 1):
        raise InsufficientDataError(
            f"need at least {2 if unbiased else 1} shots, got {z.size}"
        )
    return float(z.var(ddof=1 if unbiased else 0))


def pooled_variance_foil(
    shot_groups: Sequence[Sequence[ShotRecord]], block_size: int, unbiased: bool = False
) -> float:
    """Variance of all shots pooled across targets; kept only as a contrast case."""
    merged = [s for group in shot_groups for s in group]
    return sample_variance(merged, block_size, unbiased)


def average_over_targets(per_target_values: Sequence[float]) -> tuple[float, float]:
    """Mean of per-target estimates and its standard error (spread / sqrt N)."""
    values = np.asarray(per_target_values, dtype=np.float64)
    if values.size == 0:
        raise InsufficientDataError("no target trajectories to average")
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


@dataclass(frozen=True)
class SectorStats:
    """Per-sector shot statistics for one steered ensemble."""

    sector: int
    count: int
    mean: dict[int, float]
    variance: dict[int, float]


def sector_stats(
    shots: Sequence[ShotRecord],
    block_sizes: Sequence[int],
    unbiased: bool = True,
) -> dict[int, SectorStats]:
    """Group shots by total charge and compute per-subsystem charge statistics."""
    by_sector: dict[int, list[ShotRecord]] = {}
    for s in shots:
        by_sector.setdefault(s.total_charge, []).append(s)
    stats = {}
    for sector in sorted(by_sector):
        group = by_sector[sector]
        mean, variance = {}, {}
        for ls in block_sizes:
            z = _charge_values(group, ls)
            mean[ls] = float(z.mean())
            if z.size >= (2 if unbiased else 1):
                variance[ls] = float(z.var(ddof=1 if unbiased else 0))
        stats[sector] = SectorStats(
            sector=sector, count=len(group), mean=mean, variance=variance
        )
    return stats


def extract_cv(
    fluct_by_length: Mapping[int, float],
    pair: tuple[int, int] | None = None,
    j: int = 1,
) -> float:
    """Parasitic volume-law coefficient from an (even, even - j) length pair.

    c_V = (value[2k] - value[2k - j]) / (j + 1) with j odd. Without an
    explicit pair, the largest available even length with its partner is
    used.
    """
    if pair is None:
        if j < 1 or j % 2 == 0:
            raise ValueError(f"j must be a positive odd integer, got {j}")
        evens = sorted(
            ls for ls in fluct_by_length if ls % 2 == 0 and (ls - j) in fluct_by_length and ls - j >= 2
        )
        if not evens:
            raise InsufficientDataError(
                f"no (2k, 2k-{j}) pair available among lengths {sorted(fluct_by_length)}"
            )
        pair = (evens[-1], evens[-1] - j)
    upper, lower = pair
    if upper % 2 != 0:
        raise ValueError(f"upper length must be even, got {upper}")
    j = upper - lower
    if j < 1 or j % 2 == 0:
        raise ValueError(f"length difference must be a positive odd integer, got {j}")
    if lower < 2:
        raise ValueError(f"lower length must be >= 2, got {lower}")
    if upper not in fluct_by_length or lower not in fluct_by_length:
        raise InsufficientDataError(f"lengths {pair} not present in the curve")
    return (fluct_by_length[upper] - fluct_by_length[lower]) / (j + 1)


def bootstrap_cv_error(
    per_target_upper: Sequence[float],
    per_target_lower: Sequence[float],
    j: int = 1,
    n_resamples: int = 1000,
    seed: int = 0,
) -> float:
    """Bootstrap standard error of c_V over targets.

    c_V is a difference of two averages taken over the same targets, so the
    pair is resampled jointly.
    """
    upper = np.asarray(per_target_upper, dtype=np.float64)
    lower = np.asarray(per_target_lower, dtype=np.float64)
    if upper.size != lower.size or upper.size < 2:
        raise InsufficientDataError("need matched per-target values for both lengths")
    rng = np.random.default_rng(seed)
    n = upper.size
    estimates = np.empty(n_resamples)
    for b in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        estimates[b] = (upper[idx].mean() - lower[idx].mean()) / (j + 1)
    return float(estimates.std(ddof=1))


def corrected_fluctuation(value: float, c_v: float, block_size: int) -> float:
    """Area-law corrected fluctuation: value - c_V * (L_s - 2)."""
    return value - c_v * (block_size - 2)


def smooth_step(x: float) -> float:
    """Unit step smoothed over the scaling variable: (tanh x + 1) / 2."""
    return 0.5 * (math.tanh(x) + 1.0)


def effective_fluctuation(
    value: float,
    c_v: float,
    block_size: int,
    rate: float,
    critical_rate: float,
    nu: float,
    num_qubits: int,
) -> float:
    """Blend the raw sector value and the corrected value across the transition.

    The parasitic term is switched on by the smooth step evaluated at the
    scaling variable (p - p_c) L^(1/nu), so the result approaches the raw
    sector-0 value deep in the volume-law phase and the corrected value
    deep in the area-law phase.
    """
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    g = smooth_step((rate - critical_rate) * num_qubits ** (1.0 / nu))
    return value - g * c_v * (block_size - 2)


def reconstruct_entropy(variance: float, a: float = DEFAULT_A) -> float:
    """Entanglement entropy (nats) from the piecewise-linear fluctuation relation.

    S = a * v for v <= 2 and S = 2 ln 2 * v + (2a - 4 ln 2) above; the two
    branches agree at v = 2 by construction.
    """
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    if variance <= KNEE:
        return a * variance
    return HIGH_SLOPE * variance + (2.0 * a - 4.0 * math.log(2.0))


def fit_entropy_fluctuation_relation(
    points: Sequence[tuple[float, float]],
) -> tuple[float, float, float]:
    """Fit the two linear regimes of (charge variance, entropy) data.

    Returns (low-branch slope through the origin, high-branch slope,
    high-branch intercept), splitting the regimes at variance 2.
    """
    if len(points) < 10:
        raise FitDegenerateError(f"need at least 10 points, got {len(points)}")
    pts = np.asarray(points, dtype=np.float64)
    low = pts[pts[:, 0] <= KNEE]
    high = pts[pts[:, 0] > KNEE]
    if len(low) < 2 or len(high) < 2:
        raise FitDegenerateError(
            f"points must span both regimes: {len(low)} at or below the knee, {len(high)} above"
        )
    a_low = float(np.dot(low[:, 0], low[:, 1]) / np.dot(low[:, 0], low[:, 0]))
    slope_high, intercept_high = np.polyfit(high[:, 0], high[:, 1], 1)
    return a_low, float(slope_high), float(intercept_high)


def subsystem_charge_histogram(
    source: Sequence[ShotRecord] | StateVector, block_size: int
) -> dict[int, float]:
    """Normalized subsystem-charge distribution from shots or an exact state.

    The support is the charges -L_s .. L_s in steps of two; zero-weight
    values are omitted.
    """
    if isinstance(source, StateVector):
        weights = np.abs(source.amplitudes) ** 2
        z = subsystem_charge_values(source.num_qubits, block_size)
        counts = np.bincount(
            (z.astype(np.int32) + block_size) // 2,
            weights=weights,
            minlength=block_size + 1,
        )
        total = counts.sum()
    else:
        values = _charge_values(source, block_size)
        if values.size == 0:
            raise InsufficientDataError("no shots to histogram")
        counts = np.bincount(
            ((values.astype(np.int64) + block_size) // 2), minlength=block_size + 1
        )
        total = counts.sum()
    return {
        int(2 * k - block_size): float(c / total)
        for k, c in enumerate(counts)
        if c > 0
    }


def total_variation_distance(p: Mapping[int, float], q: Mapping[int, float]) -> float:
    """Half the L1 distance between two distributions over a shared support."""
    support = set(p) | set(q)
    return 0.5 * sum(abs(p.get(z, 0.0) - q.get(z, 0.0)) for z in support)


# ---------------------------------------------------------------------------
# aggregated curves


@dataclass
class CurveCell:
    """All estimates attached to one (p, L_s) point of a fluctuation curve."""

    raw: float = math.nan
    raw_err: float = math.nan
    sector0: float = math.nan
    sector0_err: float = math.nan
    cv: float = math.nan
    cv_err: float = math.nan
    corrected: float = math.nan
    effective: float = math.nan
    postselected: float = math.nan
    postselected_err: float = math.nan


CSV_COLUMNS = (
    "L", "p", "L_s", "raw", "sector0", "cv", "corrected", "effective",
    "postselected_ref", "stderr_raw", "stderr_sector0", "stderr_cv",
    "stderr_postselected",
)


@dataclass
class FluctuationCurve:
    """Trajectory-averaged fluctuation estimates for one system size."""

    num_qubits: int
    cells: dict[tuple[float, int], CurveCell] = field(default_factory=dict)

    def cell(self, rate: float, block_size: int) -> CurveCell:
        key = (round(float(rate), 10), int(block_size))
        if key not in self.cells:
            self.cells[key] = CurveCell()
        return self.cells[key]

    def rates(self) -> list[float]:
        return sorted({p for p, _ in self.cells})

    def block_sizes(self, rate: float) -> list[int]:
        key_rate = round(float(rate), 10)
        return sorted(ls for p, ls in self.cells if p == key_rate)

    def values(self, rate: float, attribute: str) -> dict[int, float]:
        """Map subsystem length -> the named estimate at one rate."""
        key_rate = round(float(rate), 10)
        return {
            ls: getattr(cell, attribute)
            for (p, ls), cell in self.cells.items()
            if p == key_rate and not math.isnan(getattr(cell, attribute))
        }

    def write_csv(self, path, provenance: str | None = None) -> None:
        with open(path, "w", encoding="ascii") as fh:
            if provenance:
                fh.write(f"# {provenance}\n")
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for (p, ls) in sorted(self.cells):
                c = self.cells[(p, ls)]
                row = (
                    self.num_qubits, p, ls, c.raw, c.sector0, c.cv, c.corrected,
                    c.effective, c.postselected, c.raw_err, c.sector0_err,
                    c.cv_err, c.postselected_err,
                )
                fh.write(",".join(_format_field(x) for x in row) + "\n")

    @classmethod
    def read_csv(cls, path) -> dict[int, "FluctuationCurve"]:
        """Read curves back, one per system size found in the file."""
        curves: dict[int, FluctuationCurve] = {}
        with open(path, "r", encoding="ascii") as fh:
            header: list[str] | None = None
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if header is None:
                    header = line.split(",")
                    continue
                fields = dict(zip(header, line.split(",")))
                L = int(fields["L"])
                curve = curves.setdefault(L, cls(num_qubits=L))
                cell = curve.cell(float(fields["p"]), int(fields["L_s"]))
                cell.raw = _parse_field(fields["raw"])
                cell.sector0 = _parse_field(fields["sector0"])
                cell.cv = _parse_field(fields["cv"])
                cell.corrected = _parse_field(fields["corrected"])
                cell.effective = _parse_field(fields["effective"])
                cell.postselected = _parse_field(fields["postselected_ref"])
                cell.raw_err = _parse_field(fields["stderr_raw"])
                cell.sector0_err = _parse_field(fields["stderr_sector0"])
                cell.cv_err = _parse_field(fields["stderr_cv"])
                cell.postselected_err = _parse_field(fields["stderr_postselected"])
        return curves


def _format_field(x) -> str:
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return ""
    return f"{x:.10g}"


def _parse_field(text: str) -> float:
    return float(text) if text else math.nan
