"""Dense statevector core: charge-conserving gates, Z measurements, observables.

Basis convention, fixed once for the whole package: bit n of a basis index
is the Z eigenvalue of qubit n, with bit 0 meaning sigma = +1 ("up") and
bit 1 meaning sigma = -1 ("down"). Qubit 0 is the least significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "MAX_QUBITS",
    "StateVector",
    "GateParams",
    "ChargeMoments",
    "NumericalCorruptionError",
    "init_neel",
    "init_mirrored_zero_charge",
    "sample_gate_params",
    "apply_u1_gate",
    "measure_qubit",
    "apply_pauli_x",
    "schmidt_spectrum",
    "entanglement_entropy",
    "exact_charge_moments",
    "total_charge_distribution",
    "subsystem_charge_values",
    "fidelity",
]

MAX_QUBITS = 24

NORM_TOL = 1e-10
EIGENVALUE_CUTOFF = 1e-12
PROJECTION_FLOOR = 1e-14

# 16-bit popcount lookup, enough for MAX_QUBITS <= 32 in two chunks.
_POP16 = np.array([bin(i).count("1") for i in range(1 << 16)], dtype=np.uint8)


class NumericalCorruptionError(RuntimeError):
    """Both projection weights vanished; the state norm is corrupted."""


def _popcount(indices: np.ndarray) -> np.ndarray:
    return _POP16[indices & 0xFFFF] + _POP16[(indices >> 16) & 0xFFFF]


class StateVector:
    """Pure state of an L-qubit chain as a dense complex amplitude array."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes: np.ndarray, copy: bool = False):
        if not 2 <= num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [2, {MAX_QUBITS}], got {num_qubits}")
        amps = np.array(amplitudes, dtype=np.complex128, copy=True if copy else None)
        if amps.shape != (1 << num_qubits,):
            raise ValueError(
                f"expected {1 << num_qubits} amplitudes for {num_qubits} qubits, got {amps.shape}"
            )
        self.num_qubits = num_qubits
        self.amplitudes = amps

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes, copy=True)

    def norm_error(self) -> float:
        """Drift monitor: |  ||psi||^2 - 1  |."""
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0)

    def __repr__(self) -> str:  # pragma: no cover
        return f"StateVector(L={self.num_qubits})"


@dataclass(frozen=True)
class GateParams:
    """Six phases of a charge-conserving two-qubit gate, each in [0, 2pi).

    The gate is diag(e^{i phi00}, e^{i phi11}) on span{|00>, |11>} and a
    generic 2x2 unitary on span{|01>, |10>}:

        U2 = e^{i phi3} [[ e^{i phi1} cos(theta),  e^{i phi2} sin(theta)],
                         [-e^{-i phi2} sin(theta), e^{-i phi1} cos(theta)]]

    All six parameters are drawn uniformly; theta is deliberately not
    restricted to [0, pi/2), so the ensemble is uniform-in-phases rather
    than Haar on the block.
    """

    phi00: float
    phi11: float
    phi1: float
    phi2: float
    phi3: float
    theta: float

    def two_by_two(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        e1 = np.exp(1j * self.phi1)
        e2 = np.exp(1j * self.phi2)
        u = np.array([[e1 * c, e2 * s], [-s / e2, c / e1]], dtype=np.complex128)
        return np.exp(1j * self.phi3) * u

    def matrix(self) -> np.ndarray:
        """Full 4x4 matrix in the ordered basis {|00>, |11>, |01>, |10>}."""
        m = np.zeros((4, 4), dtype=np.complex128)
        m[0, 0] = np.exp(1j * self.phi00)
        m[1, 1] = np.exp(1j * self.phi11)
        m[2:, 2:] = self.two_by_two()
        return m

    @classmethod
    def identity(cls) -> "GateParams":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def sample_gate_params(rng: np.random.Generator) -> GateParams:
    """Draw all six phases uniformly on [0, 2pi)."""
    return GateParams(*(2.0 * math.pi * rng.random(6)))


@dataclass(frozen=True)
class ChargeMoments:
    """First two moments of a subsystem charge in sigma = +-1 units."""

    mean: float
    variance: float


def init_neel(num_qubits: int) -> StateVector:
    """Alternating up/down product state; total charge is exactly zero."""
    if num_qubits % 2 != 0:
        raise ValueError(f"Neel state needs an even number of qubits, got {num_qubits}")
    if not 2 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [2, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    index = sum(1 << n for n in range(1, num_qubits, 2))  # down on odd sites
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def init_mirrored_zero_charge(num_qubits: int) -> StateVector:
    """Equal superposition of zero-charge half patterns mirrored across the cut.

    Every branch carries zero charge on each half, so the half-chain charge
    variance vanishes exactly while the half-cut entanglement entropy is
    ln C(L/2, L/4) for every Renyi index (flat Schmidt spectrum).
    """
    if num_qubits % 4 != 0:
        raise ValueError(f"mirrored state needs L divisible by 4, got {num_qubits}")
    if not 4 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [4, {MAX_QUBITS}], got {num_qubits}")
    half = num_qubits // 2
    patterns = [k for k in range(1 << half) if bin(k).count("1") == half // 2]
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amp = 1.0 / math.sqrt(len(patterns))
    for k in patterns:
        mirrored = int(f"{k:0{half}b}"[::-1], 2)
        amps[k | (mirrored << half)] = amp
    return StateVector(num_qubits, amps)


def _check_qubit(state: StateVector, n: int, width: int = 1) -> None:
    if not 0 <= n <= state.num_qubits - width:
        raise IndexError(f"qubit index {n} out of range for L={state.num_qubits} (width {width})")


def apply_u1_gate(state: StateVector, gate: GateParams, n: int) -> StateVector:
    """Apply the charge-conserving gate to qubits (n, n+1), in place."""
    _check_qubit(state, n, width=2)
    L = state.num_qubits
    # axes: [bits above n+1, bit n+1, bit n, bits below n]
    v = state.amplitudes.reshape(1 << (L - n - 2), 2, 2, 1 << n)
    v[:, 0, 0] *= np.exp(1j * gate.phi00)
    v[:, 1, 1] *= np.exp(1j * gate.phi11)
    u = gate.two_by_two()
    a01 = v[:, 1, 0]  # |01> = qubit n up, qubit n+1 down
    a10 = v[:, 0, 1]
    t01 = u[0, 0] * a01 + u[0, 1] * a10
    t10 = u[1, 0] * a01 + u[1, 1] * a10
    a01[...] = t01
    a10[...] = t10
    return state


def measure_qubit(state: StateVector, n: int, u: float) -> tuple[int, StateVector]:
    """Projective Z measurement of qubit n driven by a uniform draw u.

    Outcome +1 is taken when u < P(+1); the state is replaced by the
    normalized projection (renormalized against the kept branch's own
    weight, so the norm is restored exactly).
    """
    _check_qubit(state, n)
    L = state.num_qubits
    v = state.amplitudes.reshape(1 << (L - n - 1), 2, 1 << n)
    s0 = float(np.sum(np.abs(v[:, 0]) ** 2))
    s1 = float(np.sum(np.abs(v[:, 1]) ** 2))
    if s0 < PROJECTION_FLOOR and s1 < PROJECTION_FLOOR:
        raise NumericalCorruptionError(f"both projection weights vanished at qubit {n}")
    if u < s0 / (s0 + s1):
        outcome, kept = +1, s0
        v[:, 1] = 0.0
    else:
        outcome, kept = -1, s1
        v[:, 0] = 0.0
    state.amplitudes *= 1.0 / math.sqrt(kept)
    return outcome, state


def apply_pauli_x(state: StateVector, n: int) -> StateVector:
    """Flip bit n of every basis index, in place."""
    _check_qubit(state, n)
    L = state.num_qubits
    v = state.amplitudes.reshape(1 << (L - n - 1), 2, 1 << n)
    v[:, [0, 1]] = v[:, [1, 0]]
    return state


def schmidt_spectrum(state: StateVector, block_size: int) -> np.ndarray:
    """Squared singular values of the cut between qubits 0..block_size-1 and the rest."""
    L = state.num_qubits
    if not 1 <= block_size <= L - 1:
        raise ValueError(f"block_size must be in [1, {L - 1}], got {block_size}")
    matrix = state.amplitudes.reshape(1 << (L - block_size), 1 << block_size)
    singular = np.linalg.svd(matrix, compute_uv=False)
    return singular**2


def entanglement_entropy(state: StateVector, block_size: int, renyi_index: float = 1.0) -> float:
    """Entanglement entropy (nats) of the left block of block_size qubits.

    renyi_index 1 gives the von Neumann entropy; n > 1 gives
    ln(sum lambda^n) / (1 - n). Eigenvalues below 1e-12 are dropped from
    x ln x to avoid NaN from roundoff-negative values.
    """
    if renyi_index < 1.0:
        raise ValueError(f"renyi_index must be >= 1, got {renyi_index}")
    lam = schmidt_spectrum(state, block_size)
    if renyi_index == 1.0:
        lam = lam[lam > EIGENVALUE_CUTOFF]
        return float(-np.dot(lam, np.log(lam)))
    return float(np.log(np.sum(lam**renyi_index)) / (1.0 - renyi_index))


@lru_cache(maxsize=64)
def subsystem_charge_values(num_qubits: int, block_size: int) -> np.ndarray:
    """Charge of qubits 0..block_size-1 for every basis index (int8, read-only)."""
    if not 1 <= block_size <= num_qubits:
        raise ValueError(f"block_size must be in [1, {num_qubits}], got {block_size}")
    indices = np.arange(1 << num_qubits, dtype=np.uint32)
    low = indices & np.uint32((1 << block_size) - 1)
    z = (block_size - 2 * _popcount(low).astype(np.int16)).astype(np.int8)
    z.flags.writeable = False
    return z


def exact_charge_moments(state: StateVector, block_size: int) -> ChargeMoments:
    """Mean and variance of the left-block charge from the diagonal weights."""
    weights = np.abs(state.amplitudes) ** 2
    z = subsystem_charge_values(state.num_qubits, block_size).astype(np.float64)
    mean = float(weights @ z)
    variance = float(weights @ (z * z)) - mean * mean
    if variance < -1e-12:
        raise NumericalCorruptionError(f"charge variance {variance} below roundoff floor")
    return ChargeMoments(mean=mean, variance=max(variance, 0.0))


def total_charge_distribution(state: StateVector) -> dict[int, float]:
    """Probability of each total-charge sector; sectors below 1e-14 are omitted."""
    L = state.num_qubits
    weights = np.abs(state.amplitudes) ** 2
    downs = _popcount(np.arange(1 << L, dtype=np.uint32))
    sector_weight = np.bincount(downs, weights=weights, minlength=L + 1)
    return {
        int(L - 2 * k): float(w)
        for k, w in enumerate(sector_weight)
        if w >= 1e-14
    }


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 between two states of the same size."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("states have different sizes")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
