"""Closed-form references and statistical lemmas used to anchor the simulators.

The zero-measurement-rate analytics treat a random zero-charge state as
having a flat coefficient distribution: the reduced density matrix of the
half chain is block diagonal over subsystem charge sectors, each block
carrying C(L/2, q) exactly degenerate eigenvalues C(L/2, L/2-q) / C(L, L/2).
Binomials are kept in exact integer arithmetic up to L = 40.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .rng import substream
from .state import StateVector

__all__ = [
    "AnalyticSpectrum",
    "EntropyOracle",
    "OverheadEstimate",
    "LemmaCheck",
    "LemmaReport",
    "oracle_spectrum",
    "oracle_entropy",
    "oracle_variance",
    "overhead_estimate",
    "variance_of_variance",
    "lemma_checks",
    "brute_force_entropy",
    "brute_force_moments",
    "brute_force_reference",
]

MAX_ANALYTIC_L = 40
MAX_BRUTE_FORCE_L = 6


@dataclass(frozen=True)
class AnalyticSpectrum:
    """Half-chain reduced-density-matrix spectrum of a flat zero-charge state.

    blocks holds (subsystem charge q in 0..L/2, block dimension, eigenvalue)
    with the eigenvalue kept as an exact Fraction.
    """

    num_qubits: int
    blocks: tuple[tuple[int, int, Fraction], ...] = field(repr=False)

    def trace(self) -> Fraction:
        return sum((Fraction(dim) * lam for _, dim, lam in self.blocks), Fraction(0))

    def eigenvalues(self) -> np.ndarray:
        """Spectrum expanded to a float array with degeneracies."""
        return np.concatenate(
            [np.full(dim, float(lam)) for _, dim, lam in self.blocks]
        )


def _check_even(L: int) -> None:
    if L % 2 != 0 or not 2 <= L <= MAX_ANALYTIC_L:
        raise ValueError(f"need even L in [2, {MAX_ANALYTIC_L}], got {L}")


def oracle_spectrum(num_qubits: int) -> AnalyticSpectrum:
    """Block eigenvalues of the half-chain reduced state at zero measurement rate."""
    _check_even(num_qubits)
    half = num_qubits // 2
    total = math.comb(num_qubits, half)
    blocks = tuple(
        (q, math.comb(half, q), Fraction(math.comb(half, half - q), total))
        for q in range(half + 1)
    )
    spectrum = AnalyticSpectrum(num_qubits=num_qubits, blocks=blocks)
    # Sum-of-squared-binomials identity guarantees unit trace exactly.
    if spectrum.trace() != 1:
        raise AssertionError("analytic spectrum failed the binomial trace identity")
    return spectrum


class EntropyOracle(NamedTuple):
    exact: float
    leading: float


def oracle_entropy(num_qubits: int, renyi_index: float = 1.0) -> EntropyOracle:
    """Exact flat-state entanglement entropy plus its leading-order value.

    The leading term is ln C(L, L/2) / 2, which grows as (L/2) ln 2.
    """
    if renyi_index < 1.0:
        raise ValueError(f"renyi_index must be >= 1, got {renyi_index}")
    spectrum = oracle_spectrum(num_qubits)
    half = num_qubits // 2
    leading = 0.5 * math.log(math.comb(num_qubits, half))
    if renyi_index == 1.0:
        exact = -sum(
            dim * float(lam) * math.log(float(lam)) for _, dim, lam in spectrum.blocks
        )
    else:
        total = sum(dim * float(lam) ** renyi_index for _, dim, lam in spectrum.blocks)
        exact = math.log(total) / (1.0 - renyi_index)
    return EntropyOracle(exact=exact, leading=leading)


def oracle_variance(num_qubits: int) -> float:
    """Half-chain charge variance of the flat zero-charge state: L^2 / (4(L-1))."""
    if num_qubits % 2 != 0 or num_qubits < 4:
        raise ValueError(f"need even L >= 4, got {num_qubits}")
    return num_qubits**2 / (4.0 * (num_qubits - 1))


@dataclass(frozen=True)
class OverheadEstimate:
    """Run-count bounds for a target accuracy of the variance estimate."""

    n_sector0_min: int
    n_steered_min: int


def overhead_estimate(
    num_qubits: int,
    epsilon: float,
    variance_infinity: float | None = None,
    success_constant: float = 1.0,
) -> OverheadEstimate:
    """Minimum sector-0 sample count and total steered runs for accuracy epsilon.

    The variance-of-variance bound requires strictly more than
    2 * variance_infinity^2 / epsilon successful runs; the total run count
    divides by the success fraction success_constant / sqrt(L).
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if success_constant <= 0:
        raise ValueError(f"success_constant must be positive, got {success_constant}")
    if variance_infinity is None:
        variance_infinity = oracle_variance(num_qubits)
    bound = 2.0 * variance_infinity**2 / epsilon
    n_sector0 = math.floor(bound) + 1  # strict inequality
    n_steered = math.ceil(n_sector0 * math.sqrt(num_qubits) / success_constant)
    return OverheadEstimate(n_sector0_min=n_sector0, n_steered_min=n_steered)


def variance_of_variance(n_samples: int, variance_infinity: float) -> float:
    """Sampling variance of an n-sample charge variance: 2 * var_inf^2 / n."""
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    return 2.0 * variance_infinity**2 / n_samples


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    observed: float
    expected: float
    std_error: float

    @property
    def n_sigma(self) -> float:
        return abs(self.observed - self.expected) / self.std_error

    @property
    def passed(self) -> bool:
        return self.n_sigma <= 5.0


@dataclass(frozen=True)
class LemmaReport:
    checks: tuple[LemmaCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def format(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(
                f"{status} {c.name}: observed {c.observed:.5f}, expected {c.expected:.5f}"
                f" ({c.n_sigma:.2f} s.e.)"
            )
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _variance_se(samples: np.ndarray) -> float:
    """Standard error of the sample variance from the fourth central moment."""
    n = samples.size
    centered = samples - samples.mean()
    v = float(np.mean(centered**2))
    m4 = float(np.mean(centered**4))
    return math.sqrt(max(m4 - v * v, 0.0) / n)


def lemma_checks(sample_count: int = 100_000, seed: int = 7) -> LemmaReport:
    """Monte Carlo verification of the squared-Gaussian moment lemmas.

    Checks, each within 5 standard errors:
      * y = x^2 of a standard normal has mean 1 and variance 2;
      * the variance of a sum of k independent y's is 2k;
      * Y = sum_i x_i^2 - n xbar^2 over an n-sample batch has variance 2(n-1).
    """
    if sample_count < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {sample_count}")
    rng = substream(seed, "lemmas")

    x = rng.standard_normal(sample_count)
    y = x * x
    checks = [
        LemmaCheck(
            "chi-square mean <y>",
            observed=float(y.mean()),
            expected=1.0,
            std_error=float(y.std(ddof=1) / math.sqrt(sample_count)),
        ),
        LemmaCheck(
            "chi-square variance of y",
            observed=float(y.var(ddof=1)),
            expected=2.0,
            std_error=_variance_se(y),
        ),
    ]

    k = 4
    sums = rng.standard_normal((sample_count // k, k))
    s = np.sum(sums * sums, axis=1)
    checks.append(
        LemmaCheck(
            f"cumulant additivity: var of sum of {k} y's",
            observed=float(s.var(ddof=1)),
            expected=2.0 * k,
            std_error=_variance_se(s),
        )
    )

    n = 16
    batches = rng.standard_normal((sample_count // n, n))
    y_big = np.sum(batches * batches, axis=1) - n * batches.mean(axis=1) ** 2
    checks.append(
        LemmaCheck(
            f"var of Y = sum x_i^2 - x_(n+1)^2 at n={n}",
            observed=float(y_big.var(ddof=1)),
            expected=2.0 * (n - 1),
            std_error=_variance_se(y_big),
        )
    )
    return LemmaReport(checks=tuple(checks))


def _dense_z_block(num_qubits: int, block_size: int) -> np.ndarray:
    """Dense 2^L x 2^L matrix of the left-block charge operator."""
    z1 = np.array([[1.0, 0.0], [0.0, -1.0]])
    eye = np.eye(2)
    op = np.zeros((1 << num_qubits, 1 << num_qubits))
    for site in range(block_size):
        term = np.array([[1.0]])
        # qubit 0 is the least significant bit, so it is the rightmost factor
        for q in reversed(range(num_qubits)):
            term = np.kron(term, z1 if q == site else eye)
        op += term
    return op


def brute_force_entropy(state: StateVector, block_size: int, renyi_index: float = 1.0) -> float:
    """Entropy via an explicit density matrix and elementwise partial trace.

    Deliberately avoids the reshape/SVD path so it can serve as an
    independent cross-check; limited to L <= 6.
    """
    L = state.num_qubits
    if L > MAX_BRUTE_FORCE_L:
        raise ValueError(f"brute force limited to L <= {MAX_BRUTE_FORCE_L}, got {L}")
    if not 1 <= block_size <= L - 1:
        raise ValueError(f"block_size must be in [1, {L - 1}], got {block_size}")
    psi = state.amplitudes
    rho = np.outer(psi, psi.conj())
    dim_s, dim_env = 1 << block_size, 1 << (L - block_size)
    rho_s = np.zeros((dim_s, dim_s), dtype=np.complex128)
    for s_row in range(dim_s):
        for s_col in range(dim_s):
            acc = 0.0 + 0.0j
            for env in range(dim_env):
                acc += rho[s_row | (env << block_size), s_col | (env << block_size)]
            rho_s[s_row, s_col] = acc
    lam = np.linalg.eigvalsh(rho_s)
    lam = lam[lam > 1e-12]
    if renyi_index == 1.0:
        return float(-np.dot(lam, np.log(lam)))
    return float(np.log(np.sum(lam**renyi_index)) / (1.0 - renyi_index))


def brute_force_moments(state: StateVector, block_size: int) -> tuple[float, float]:
    """(mean, variance) of the left-block charge via dense operator traces."""
    L = state.num_qubits
    if L > MAX_BRUTE_FORCE_L:
        raise ValueError(f"brute force limited to L <= {MAX_BRUTE_FORCE_L}, got {L}")
    psi = state.amplitudes
    rho = np.outer(psi, psi.conj())
    z_op = _dense_z_block(L, block_size)
    mean = float(np.trace(rho @ z_op).real)
    second = float(np.trace(rho @ z_op @ z_op).real)
    return mean, second - mean * mean


def brute_force_reference(
    state: StateVector, block_size: int, renyi_index: float = 1.0
) -> tuple[float, float, float]:
    """(entropy, charge mean, charge variance) micro-oracle for L <= 6 states."""
    entropy = brute_force_entropy(state, block_size, renyi_index)
    mean, variance = brute_force_moments(state, block_size)
    return entropy, mean, variance
