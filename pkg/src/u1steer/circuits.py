"""Brickwork circuit realizations, target trajectories, and steered runs.

A realization freezes all randomness of one circuit: the six-phase gate
parameters per link and the measured-qubit sets per half-cycle. A target
run records Born-rule outcomes m; steered runs replay the same schedule,
correcting every mismatching outcome with a Pauli-X so the local state
agrees with the target, and finish with a full Z-basis readout.

Steered batches evolve all runs of one target simultaneously as a
(2^L, runs) array; every run consumes its own labeled substream, so batch,
loop, and multi-worker execution produce identical records.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .rng import child_seed, substream
from .state import (
    MAX_QUBITS,
    GateParams,
    NumericalCorruptionError,
    StateVector,
    apply_pauli_x,
    apply_u1_gate,
    exact_charge_moments,
    init_mirrored_zero_charge,
    init_neel,
    measure_qubit,
    sample_gate_params,
    schmidt_spectrum,
    subsystem_charge_values,
)

__all__ = [
    "HalfCycle",
    "CircuitRealization",
    "TargetRecord",
    "ExactSeries",
    "ShotRecord",
    "TimeEvolution",
    "brick_links",
    "sample_realization",
    "run_target",
    "run_steered",
    "batch_steer",
    "run_time_evolution_experiment",
    "save_shots",
    "load_shots",
    "save_targets",
    "load_targets",
]

PROJECTION_FLOOR = 1e-14


def brick_links(num_qubits: int, half_cycle_index: int) -> range:
    """Left qubit of each gate link; even half-cycle indices start at qubit 0."""
    return range(half_cycle_index % 2, num_qubits - 1, 2)


@dataclass(frozen=True, eq=False)
class HalfCycle:
    """Gates over one brickwork layer plus the qubits measured after it."""

    gates: tuple[GateParams, ...]
    measured: np.ndarray  # ascending qubit indices


@dataclass(frozen=True, eq=False)
class CircuitRealization:
    """Frozen randomness of one circuit: gates and measurement locations."""

    num_qubits: int
    rate: float
    num_cycles: int
    burn_in: int
    seed: int
    half_cycles: tuple[HalfCycle, ...]

    @property
    def num_measurement_events(self) -> int:
        return sum(len(hc.measured) for hc in self.half_cycles)

    def signature(self) -> tuple:
        return (self.num_qubits, self.rate, self.num_cycles, self.burn_in, self.seed)


def sample_realization(
    num_qubits: int,
    rate: float,
    num_cycles: int,
    burn_in: int | None = None,
    seed: int = 0,
) -> CircuitRealization:
    """Draw gates and measurement locations from dedicated substreams of seed."""
    if not 2 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [2, {MAX_QUBITS}], got {num_qubits}")
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"measurement rate must be in [0, 1], got {rate}")
    if num_cycles < 1:
        raise ValueError(f"num_cycles must be >= 1, got {num_cycles}")
    if burn_in is None:
        burn_in = 2 * num_qubits
    if burn_in < 0 or burn_in >= num_cycles:
        raise ValueError(f"burn_in must be in [0, num_cycles), got {burn_in}")

    gate_rng = substream(seed, "gates")
    location_rng = substream(seed, "locations")
    half_cycles = []
    for h in range(2 * num_cycles):
        gates = tuple(sample_gate_params(gate_rng) for _ in brick_links(num_qubits, h))
        marks = location_rng.random(num_qubits) < rate
        half_cycles.append(HalfCycle(gates=gates, measured=np.flatnonzero(marks)))
    return CircuitRealization(
        num_qubits=num_qubits,
        rate=rate,
        num_cycles=num_cycles,
        burn_in=burn_in,
        seed=seed,
        half_cycles=tuple(half_cycles),
    )


@dataclass(frozen=True, eq=False)
class ExactSeries:
    """Per-cycle exact observables of a target trajectory (after burn-in)."""

    cycles: np.ndarray
    svn: np.ndarray
    s2: np.ndarray
    variance: dict[int, np.ndarray]  # subsystem length -> per-cycle charge variance


@dataclass(frozen=True, eq=False)
class TargetRecord:
    """One target trajectory: its realization, outcomes m, and exact references."""

    realization: CircuitRealization
    outcome_seed: int
    outcomes: np.ndarray  # int8 in {+1, -1}, one per measurement event
    final_state: StateVector | None = None
    series: ExactSeries | None = None


@dataclass(frozen=True, eq=False)
class ShotRecord:
    """Terminal Z-basis readout of one steered run."""

    run_index: int
    readout_bits: np.ndarray  # uint8 bit per qubit, qubit 0 first; bit 1 = down
    flips: int

    @property
    def total_charge(self) -> int:
        return int(self.readout_bits.size - 2 * int(self.readout_bits.sum()))

    def subsystem_charge(self, block_size: int) -> int:
        if not 1 <= block_size <= self.readout_bits.size:
            raise ValueError(f"block_size must be in [1, {self.readout_bits.size}]")
        return int(block_size - 2 * int(self.readout_bits[:block_size].sum()))

    def subsystem_charges(self, block_sizes: Iterable[int]) -> dict[int, int]:
        return {ls: self.subsystem_charge(ls) for ls in block_sizes}

    @property
    def readout_string(self) -> str:
        return "".join("1" if b else "0" for b in self.readout_bits)

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "run": self.run_index,
                "readout": self.readout_string,
                "zl": self.total_charge,
                "flips": self.flips,
            }
        )

    @classmethod
    def from_json_line(cls, line: str) -> "ShotRecord":
        payload = json.loads(line)
        bits = np.frombuffer(payload["readout"].encode("ascii"), dtype=np.uint8) - ord("0")
        record = cls(run_index=int(payload["run"]), readout_bits=bits, flips=int(payload["flips"]))
        if record.total_charge != int(payload["zl"]):
            raise ValueError(f"corrupt shot record: stored charge {payload['zl']} "
                             f"disagrees with readout {payload['readout']}")
        return record


# ---------------------------------------------------------------------------
# compiled schedules and batched kernels


@dataclass(frozen=True)
class _CompiledGate:
    qubit: int
    phase00: complex
    phase11: complex
    block: np.ndarray  # 2x2 unitary on span{|01>, |10>}


def _compile(realization: CircuitRealization) -> list[tuple[list[_CompiledGate], np.ndarray]]:
    compiled = []
    for h, hc in enumerate(realization.half_cycles):
        gates = [
            _CompiledGate(
                qubit=n,
                phase00=complex(np.exp(1j * g.phi00)),
                phase11=complex(np.exp(1j * g.phi11)),
                block=g.two_by_two(),
            )
            for n, g in zip(brick_links(realization.num_qubits, h), hc.gates)
        ]
        compiled.append((gates, hc.measured))
    return compiled


def _apply_gate_single(state: StateVector, gate: _CompiledGate) -> None:
    L, n = state.num_qubits, gate.qubit
    v = state.amplitudes.reshape(1 << (L - n - 2), 2, 2, 1 << n)
    v[:, 0, 0] *= gate.phase00
    v[:, 1, 1] *= gate.phase11
    u = gate.block
    a01 = v[:, 1, 0]
    a10 = v[:, 0, 1]
    t01 = u[0, 0] * a01 + u[0, 1] * a10
    t10 = u[1, 0] * a01 + u[1, 1] * a10
    a01[...] = t01
    a10[...] = t10


def _apply_gate_batch(amps: np.ndarray, num_qubits: int, gate: _CompiledGate) -> None:
    n, runs = gate.qubit, amps.shape[1]
    v = amps.reshape(1 << (num_qubits - n - 2), 2, 2, (1 << n), runs)
    v[:, 0, 0] *= gate.phase00
    v[:, 1, 1] *= gate.phase11
    u = gate.block
    a01 = v[:, 1, 0]
    a10 = v[:, 0, 1]
    t01 = u[0, 0] * a01 + u[0, 1] * a10
    t10 = u[1, 0] * a01 + u[1, 1] * a10
    a01[...] = t01
    a10[...] = t10


def _branch_weights(amps: np.ndarray, num_qubits: int, qubit: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    runs = amps.shape[1]
    v = amps.reshape(1 << (num_qubits - qubit - 1), 2, (1 << qubit), runs)
    # per-run squared norms of both branches without materializing |v|^2
    s0 = np.einsum("ijr,ijr->r", v[:, 0].real, v[:, 0].real)
    s0 += np.einsum("ijr,ijr->r", v[:, 0].imag, v[:, 0].imag)
    s1 = np.einsum("ijr,ijr->r", v[:, 1].real, v[:, 1].real)
    s1 += np.einsum("ijr,ijr->r", v[:, 1].imag, v[:, 1].imag)
    return v, s0, s1


def _measure_and_steer_batch(
    amps: np.ndarray,
    num_qubits: int,
    qubit: int,
    target_outcome: int,
    draws: np.ndarray,
    flips: np.ndarray,
    forced_outcome: int | None = None,
) -> None:
    """Measure one qubit across all runs, then force agreement with the target.

    Projection and the conditional Pauli-X are fused: the surviving branch is
    written directly into the slot selected by the target outcome.
    """
    v, s0, s1 = _branch_weights(amps, num_qubits, qubit)
    if np.any((s0 < PROJECTION_FLOOR) & (s1 < PROJECTION_FLOOR)):
        raise NumericalCorruptionError(f"projection weights vanished at qubit {qubit}")
    if forced_outcome is None:
        plus = draws < s0 / (s0 + s1)
    else:
        plus = np.full(amps.shape[1], forced_outcome == +1)
        selected = s0 if forced_outcome == +1 else s1
        if np.any(selected < PROJECTION_FLOOR):
            raise ValueError(f"forced outcome {forced_outcome} has zero weight at qubit {qubit}")
    w0 = np.zeros(amps.shape[1])
    w1 = np.zeros(amps.shape[1])
    w0[plus] = 1.0 / np.sqrt(s0[plus])
    w1[~plus] = 1.0 / np.sqrt(s1[~plus])
    target_plus = target_outcome == +1
    flips += plus != target_plus
    if target_plus:
        v[:, 0] *= w0
        v[:, 0] += v[:, 1] * w1
        v[:, 1] = 0.0
    else:
        v[:, 1] *= w1
        v[:, 1] += v[:, 0] * w0
        v[:, 0] = 0.0


def _measure_batch(
    amps: np.ndarray, num_qubits: int, qubit: int, draws: np.ndarray
) -> np.ndarray:
    """Plain projective measurement across runs; returns the bit per run."""
    v, s0, s1 = _branch_weights(amps, num_qubits, qubit)
    if np.any((s0 < PROJECTION_FLOOR) & (s1 < PROJECTION_FLOOR)):
        raise NumericalCorruptionError(f"projection weights vanished at qubit {qubit}")
    plus = draws < s0 / (s0 + s1)
    w0 = np.zeros(amps.shape[1])
    w1 = np.zeros(amps.shape[1])
    w0[plus] = 1.0 / np.sqrt(s0[plus])
    w1[~plus] = 1.0 / np.sqrt(s1[~plus])
    v[:, 0] *= w0
    v[:, 1] *= w1
    return (~plus).astype(np.uint8)


# ---------------------------------------------------------------------------
# trajectory execution


def run_target(
    realization: CircuitRealization,
    outcome_seed: int,
    *,
    keep_final_state: bool = True,
    collect_series: bool = False,
    series_subsystems: Sequence[int] | None = None,
    series_entropies: bool = True,
) -> TargetRecord:
    """Run one Born-rule trajectory from the Neel state and record its outcomes.

    With collect_series, exact observables (von Neumann and second Renyi
    entropy at the half cut, charge variance at each requested subsystem
    length) are recorded at the end of every cycle after burn-in.
    series_entropies=False skips the Schmidt decomposition, which dominates
    the cost at large L when only charge statistics are needed.
    """
    L = realization.num_qubits
    state = init_neel(L)
    compiled = _compile(realization)
    n_events = realization.num_measurement_events
    draws = substream(outcome_seed, "outcomes", "target").random(n_events)
    outcomes = np.empty(n_events, dtype=np.int8)

    if series_subsystems is None:
        series_subsystems = (L // 2,)
    series_subsystems = tuple(series_subsystems)
    cycles, svn_list, s2_list = [], [], []
    var_lists: dict[int, list[float]] = {ls: [] for ls in series_subsystems}

    k = 0
    for t in range(1, realization.num_cycles + 1):
        for gates, measured in compiled[2 * (t - 1): 2 * t]:
            for gate in gates:
                _apply_gate_single(state, gate)
            for n in measured:
                outcomes[k], _ = measure_qubit(state, int(n), draws[k])
                k += 1
        if collect_series and t > realization.burn_in:
            cycles.append(t)
            if series_entropies:
                lam = schmidt_spectrum(state, L // 2)
                kept = lam[lam > 1e-12]
                svn_list.append(float(-np.dot(kept, np.log(kept))))
                s2_list.append(float(-np.log(np.sum(lam**2))))
            for ls in series_subsystems:
                var_lists[ls].append(exact_charge_moments(state, ls).variance)

    series = None
    if collect_series:
        series = ExactSeries(
            cycles=np.array(cycles),
            svn=np.array(svn_list),
            s2=np.array(s2_list),
            variance={ls: np.array(vals) for ls, vals in var_lists.items()},
        )
    return TargetRecord(
        realization=realization,
        outcome_seed=outcome_seed,
        outcomes=outcomes,
        final_state=state if keep_final_state else None,
        series=series,
    )


def _check_pair(realization: CircuitRealization, target: TargetRecord) -> None:
    if target.realization.signature() != realization.signature():
        raise ValueError("target record belongs to a different circuit realization")
    if len(target.outcomes) != realization.num_measurement_events:
        raise ValueError("target outcome count does not match the realization schedule")


def _steer_chunk(
    realization: CircuitRealization,
    target: TargetRecord,
    master_seed: int,
    start: int,
    count: int,
    force_outcomes: Sequence[int] | None = None,
    keep_states: bool = False,
) -> tuple[list[ShotRecord], np.ndarray | None]:
    L = realization.num_qubits
    dim = 1 << L
    compiled = _compile(realization)
    total_draws = realization.num_measurement_events + L

    draws = np.empty((count, total_draws))
    for i in range(count):
        draws[i] = substream(master_seed, "outcomes", "run", start + i).random(total_draws)

    amps = np.zeros((dim, count), dtype=np.complex128)
    amps[sum(1 << n for n in range(1, L, 2))] = 1.0
    flips = np.zeros(count, dtype=np.int64)

    k = 0
    for gates, measured in compiled:
        for gate in gates:
            _apply_gate_batch(amps, L, gate)
        for n in measured:
            forced = None if force_outcomes is None else int(force_outcomes[k])
            _measure_and_steer_batch(
                amps, L, int(n), int(target.outcomes[k]), draws[:, k], flips, forced
            )
            k += 1

    prereadout = amps.copy() if keep_states else None
    bits = np.empty((L, count), dtype=np.uint8)
    for n in range(L):
        bits[n] = _measure_batch(amps, L, n, draws[:, k])
        k += 1

    records = [
        ShotRecord(run_index=start + i, readout_bits=bits[:, i].copy(), flips=int(flips[i]))
        for i in range(count)
    ]
    return records, prereadout


def run_steered(
    realization: CircuitRealization,
    target: TargetRecord,
    run_seed: int,
    *,
    run_index: int = 0,
    force_outcomes: Sequence[int] | None = None,
    return_state: bool = False,
) -> ShotRecord | tuple[ShotRecord, StateVector]:
    """Replay the realization with steering corrections and read out all qubits.

    force_outcomes substitutes the given mid-circuit outcomes for Born
    sampling (a test hook); the terminal readout is always Born sampled.
    """
    _check_pair(realization, target)
    records, states = _steer_chunk(
        realization,
        target,
        master_seed=run_seed,
        start=run_index,
        count=1,
        force_outcomes=force_outcomes,
        keep_states=return_state,
    )
    if return_state:
        return records[0], StateVector(realization.num_qubits, states[:, 0], copy=True)
    return records[0]


def default_chunk_size(num_qubits: int) -> int:
    """Chunk runs so one batch stays near 2^23 amplitudes (about 128 MiB)."""
    return max(1, (1 << 23) >> num_qubits)


def batch_steer(
    realization: CircuitRealization,
    target: TargetRecord,
    num_runs: int,
    master_seed: int,
    *,
    n_workers: int = 1,
    chunk_size: int | None = None,
) -> list[ShotRecord]:
    """Run num_runs independent steered repetitions of one target.

    Run i consumes substream (master_seed, "outcomes", "run", i), so the
    result is a pure function of the seeds: chunking and worker count only
    affect scheduling, never content.
    """
    _check_pair(realization, target)
    if num_runs < 1:
        raise ValueError(f"num_runs must be >= 1, got {num_runs}")
    if chunk_size is None:
        chunk_size = default_chunk_size(realization.num_qubits)
    starts = list(range(0, num_runs, chunk_size))

    def work(start: int) -> list[ShotRecord]:
        return _steer_chunk(
            realization, target, master_seed, start, min(chunk_size, num_runs - start)
        )[0]

    if n_workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            chunks = list(pool.map(work, starts))
    else:
        chunks = [work(s) for s in starts]
    return [record for chunk in chunks for record in chunk]


# ---------------------------------------------------------------------------
# time evolution experiment


@dataclass(frozen=True, eq=False)
class TimeEvolution:
    """Per-cycle observables averaged over circuit realizations."""

    initial: str
    rate: float
    cycles: np.ndarray  # 0..T, cycle 0 is the initial state
    svn_mean: np.ndarray
    svn_err: np.ndarray
    variance_mean: np.ndarray
    variance_err: np.ndarray

    def saturation_cycle(self, level: float = 0.9) -> int:
        """First cycle where the variance reaches `level` times its late plateau."""
        tail = self.variance_mean[-max(1, len(self.variance_mean) // 4):]
        plateau = float(tail.mean())
        reached = np.flatnonzero(self.variance_mean >= level * plateau)
        return int(self.cycles[reached[0]]) if reached.size else int(self.cycles[-1])


def run_time_evolution_experiment(
    num_qubits: int,
    rate: float,
    initial: str,
    num_configs: int,
    *,
    num_cycles: int | None = None,
    seed: int = 0,
) -> TimeEvolution:
    """Average exact per-cycle observables over independent realizations.

    initial is "neel" or "mirrored"; observables are the half-cut von
    Neumann entropy and charge variance, recorded from cycle 0 onward.
    """
    if initial not in ("neel", "mirrored"):
        raise ValueError(f"initial state must be 'neel' or 'mirrored', got {initial!r}")
    if initial == "mirrored" and num_qubits % 4 != 0:
        raise ValueError(f"mirrored start needs L divisible by 4, got {num_qubits}")
    if num_configs < 1:
        raise ValueError(f"num_configs must be >= 1, got {num_configs}")
    if num_cycles is None:
        num_cycles = 2 * num_qubits

    half = num_qubits // 2
    svn = np.empty((num_configs, num_cycles + 1))
    var = np.empty((num_configs, num_cycles + 1))
    for j in range(num_configs):
        realization = sample_realization(
            num_qubits, rate, num_cycles, burn_in=0,
            seed=child_seed(seed, "timeevo-circuit", j),
        )
        compiled = _compile(realization)
        draws = substream(seed, "timeevo-outcomes", j).random(realization.num_measurement_events)
        state = init_neel(num_qubits) if initial == "neel" else init_mirrored_zero_charge(num_qubits)

        def record(t: int) -> None:
            lam = schmidt_spectrum(state, half)
            kept = lam[lam > 1e-12]
            svn[j, t] = float(-np.dot(kept, np.log(kept)))
            var[j, t] = exact_charge_moments(state, half).variance

        record(0)
        k = 0
        for t in range(1, num_cycles + 1):
            for gates, measured in compiled[2 * (t - 1): 2 * t]:
                for gate in gates:
                    _apply_gate_single(state, gate)
                for n in measured:
                    _, _ = measure_qubit(state, int(n), draws[k])
                    k += 1
            record(t)

    def spread(values: np.ndarray) -> np.ndarray:
        if num_configs < 2:
            return np.zeros(values.shape[1])
        return values.std(axis=0, ddof=1) / math.sqrt(num_configs)

    return TimeEvolution(
        initial=initial,
        rate=rate,
        cycles=np.arange(num_cycles + 1),
        svn_mean=svn.mean(axis=0),
        svn_err=spread(svn),
        variance_mean=var.mean(axis=0),
        variance_err=spread(var),
    )


# ---------------------------------------------------------------------------
# persistence


def save_shots(path, records: Iterable[ShotRecord]) -> None:
    """Write shot records as line-delimited JSON."""
    with open(path, "w", encoding="ascii") as fh:
        for record in records:
            fh.write(record.to_json_line())
            fh.write("\n")


def load_shots(path) -> list[ShotRecord]:
    with open(path, "r", encoding="ascii") as fh:
        return [ShotRecord.from_json_line(line) for line in fh if line.strip()]


def save_targets(path, targets: Iterable[TargetRecord]) -> None:
    """Persist target records (realization parameters plus outcome lists)."""
    with open(path, "w", encoding="ascii") as fh:
        for t in targets:
            r = t.realization
            fh.write(
                json.dumps(
                    {
                        "seed": r.seed,
                        "L": r.num_qubits,
                        "p": r.rate,
                        "T": r.num_cycles,
                        "burn_in": r.burn_in,
                        "outcome_seed": t.outcome_seed,
                        "outcomes": [int(o) for o in t.outcomes],
                    }
                )
            )
            fh.write("\n")


def load_targets(path) -> list[TargetRecord]:
    """Rebuild target records; realizations are regenerated from their seeds."""
    targets = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            if not line.strip():
                continue
            payload = json.loads(line)
            realization = sample_realization(
                payload["L"], payload["p"], payload["T"], payload["burn_in"], payload["seed"]
            )
            outcomes = np.array(payload["outcomes"], dtype=np.int8)
            if len(outcomes) != realization.num_measurement_events:
                raise ValueError(
                    f"stored outcomes ({len(outcomes)}) do not match the regenerated "
                    f"schedule ({realization.num_measurement_events} events)"
                )
            targets.append(
                TargetRecord(
                    realization=realization,
                    outcome_seed=int(payload["outcome_seed"]),
                    outcomes=outcomes,
                )
            )
    return targets
