"""Ensemble gate protocols compiled to square-pulse schedules.

One-qubit rotation on level ``i``: a pi pulse ``i -> r``, a rotation on the
reservoir transition (which couples the states with zero and one Rydberg
atom), and a pi pulse ``r -> i`` with its phase advanced by pi.  Two-qubit
phase gate: pi on ``i -> r``, 2pi on ``j -> r'`` (blocked when a Rydberg atom
is already present), pi back on ``r -> i``.  The target pulse addresses the
second sublevel ``r'`` because a field resonant with ``j <-> r`` would also
return the control's Rydberg atom to ``|j>``.

The register is ordered with ``b_1`` as the most significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .dynamics import TWO_PI, BlockadeModel, DecayModel, PulseSpec, apply_pulse, mhz
from .errors import IdenticalIndicesError, IndexOutOfRangeError, InvalidDimensionsError
from .fock import FockBasis, enumerate_basis

# U / Omega used for "ideal" blockade throughout the package
IDEAL_BLOCKADE_RATIO = 1e6

COMPOSITE_MODES = ("none", "amplitude-robust")


def ideal_blockade(rabi_frequency: float) -> BlockadeModel:
    return BlockadeModel.fixed(IDEAL_BLOCKADE_RATIO * rabi_frequency)


@dataclass(frozen=True)
class CalibrationPolicy:
    """How reservoir-pulse durations are set.

    ``reference_occupancy`` is the reservoir count used to convert a rotation
    angle into a duration (default ``K - ceil(N/2)``).  ``exact=True`` is an
    idealisation in which every branch couples with the reference occupancy,
    removing the branch-dependent collective enhancement.
    """

    reference_occupancy: int | None = None
    composite_mode: str = "none"
    exact: bool = False

    def __post_init__(self):
        if self.composite_mode not in COMPOSITE_MODES:
            raise ValueError(f"composite_mode must be one of {COMPOSITE_MODES}")


@dataclass(frozen=True)
class PhysicsConfig:
    """Everything the simulator needs to know about the ensemble and lasers."""

    atom_count: int
    qubit_count: int
    rabi_frequency: float = mhz(1.0)
    blockade: BlockadeModel | None = None
    decay: DecayModel = field(default_factory=DecayModel)
    register_cap: int = 1
    rydberg_cap: int = 2
    aux_rydberg_cap: int = 1
    calibration: CalibrationPolicy = field(default_factory=CalibrationPolicy)
    # (source level, rydberg sublevel) -> ((other level, extra detuning rad/us), ...)
    crosstalk: Mapping[tuple[int, int], Sequence[tuple[int, float]]] | None = None
    # relative amplitude miscalibration of reservoir pulses
    reservoir_rabi_scale: float = 1.0

    def __post_init__(self):
        if self.blockade is None:
            object.__setattr__(self, "blockade", ideal_blockade(self.rabi_frequency))
        if self.rabi_frequency <= 0:
            raise ValueError("rabi_frequency must be positive")
        ref = self.reference_occupancy
        if not (self.atom_count - self.qubit_count <= ref <= self.atom_count):
            raise InvalidDimensionsError(
                f"reference_occupancy {ref} outside [K-N, K] = [{self.atom_count - self.qubit_count}, {self.atom_count}]"
            )
        if ref < 1:
            raise InvalidDimensionsError("reference_occupancy must be at least 1")

    @property
    def basis(self) -> FockBasis:
        return enumerate_basis(
            self.atom_count, self.qubit_count, (self.register_cap, self.rydberg_cap), self.aux_rydberg_cap
        )

    @property
    def reference_occupancy(self) -> int:
        ref = self.calibration.reference_occupancy
        if ref is None:
            ref = self.atom_count - math.ceil(self.qubit_count / 2)
        return int(ref)

    def replace(self, **changes) -> PhysicsConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class GateOp:
    """A logical gate; qubit indices are 1-based register levels."""

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    @classmethod
    def rot(cls, i: int, theta: float, phi: float) -> GateOp:
        return cls("ROT", (int(i),), (float(theta), float(phi)))

    @classmethod
    def rz(cls, i: int, theta: float) -> GateOp:
        return cls("RZ", (int(i),), (float(theta),))

    @classmethod
    def cz(cls, i: int, j: int) -> GateOp:
        return cls("CZ", (int(i), int(j)))

    @classmethod
    def cnot(cls, i: int, j: int) -> GateOp:
        return cls("CNOT", (int(i), int(j)))

    def validate(self, qubit_count: int) -> None:
        for q in self.qubits:
            if not 1 <= q <= qubit_count:
                raise IndexOutOfRangeError(f"qubit {q} outside 1..{qubit_count}")
        if len(self.qubits) == 2 and self.qubits[0] == self.qubits[1]:
            raise IdenticalIndicesError(f"{self.kind} needs two distinct qubits, got {self.qubits}")


@dataclass(frozen=True)
class PulseSchedule:
    """Time-ordered pulses; one laser coupling active at a time."""

    pulses: tuple[PulseSpec, ...]
    label: str = ""

    @property
    def total_duration(self) -> float:
        return float(sum(p.duration for p in self.pulses))

    def __add__(self, other: PulseSchedule) -> PulseSchedule:
        label = " ; ".join(x for x in (self.label, other.label) if x)
        return PulseSchedule(self.pulses + other.pulses, label)

    def __len__(self):
        return len(self.pulses)


def bb1_segments(theta: float, phase: float) -> list[tuple[float, float]]:
    """(area, phase) list of the five-segment BB1 sequence for a ``theta`` rotation."""
    phi1 = math.acos(-theta / (4 * math.pi))
    return [
        (theta / 2, phase),
        (math.pi, phase + phi1),
        (2 * math.pi, phase + 3 * phi1),
        (math.pi, phase + phi1),
        (theta / 2, phase),
    ]


def _reservoir_pulses(theta: float, phase: float, config: PhysicsConfig) -> list[PulseSpec]:
    if theta < 0:
        theta, phase = -theta, phase + math.pi
    omega = config.rabi_frequency
    k_ref = config.reference_occupancy
    collective = math.sqrt(k_ref) * omega
    fixed = k_ref if config.calibration.exact else None
    if config.calibration.composite_mode == "amplitude-robust":
        segments = bb1_segments(theta, phase)
    else:
        segments = [(theta, phase)]
    return [PulseSpec(0, omega, area / collective, phase=ph, fixed_occupancy=fixed) for area, ph in segments]


def compile_rotation(i: int, theta: float, phi: float, config: PhysicsConfig) -> PulseSchedule:
    """Rotation ``exp(-i theta/2 (cos phi X + sin phi Y))`` on qubit ``i``.

    The reservoir pulse uses phase ``phi - pi/2``; together with the pi-phase
    step between the two transfer pulses this makes the ideal-blockade map
    exactly the SU(2) rotation, with no residual phase on either branch.
    """
    GateOp.rot(i, theta, phi).validate(config.qubit_count)
    omega = config.rabi_frequency
    t_pi = math.pi / omega
    pulses = [PulseSpec(i, omega, t_pi, phase=0.0)]
    pulses += _reservoir_pulses(theta, phi - math.pi / 2, config)
    pulses.append(PulseSpec(i, omega, t_pi, phase=math.pi))
    return PulseSchedule(tuple(pulses), f"ROT {i} {theta!r} {phi!r}")


def compile_rz(i: int, theta: float, config: PhysicsConfig) -> PulseSchedule:
    """Z rotation as two pi rotations whose axes differ by ``theta/2``."""
    GateOp.rz(i, theta).validate(config.qubit_count)
    sched = compile_rotation(i, math.pi, 0.0, config) + compile_rotation(i, math.pi, theta / 2, config)
    return replace(sched, label=f"RZ {i} {theta!r}")


def compile_cz(i: int, j: int, config: PhysicsConfig) -> PulseSchedule:
    GateOp.cz(i, j).validate(config.qubit_count)
    omega = config.rabi_frequency
    t_pi = math.pi / omega
    pulses = (
        PulseSpec(i, omega, t_pi, phase=0.0),
        PulseSpec(j, omega, 2 * t_pi, phase=0.0, rydberg_level=1),
        PulseSpec(i, omega, t_pi, phase=math.pi),
    )
    return PulseSchedule(pulses, f"CZ {i} {j}")


# axis of the target rotations around the phase gate; the Y axis turns the
# protocol's phase table into CNOT up to a Z on the target
_CNOT_AXIS = math.pi / 2


def compile_cnot(i: int, j: int, config: PhysicsConfig) -> PulseSchedule:
    GateOp.cnot(i, j).validate(config.qubit_count)
    half = compile_rotation(j, math.pi / 2, _CNOT_AXIS, config)
    sched = half + compile_cz(i, j, config) + half
    return replace(sched, label=f"CNOT {i} {j}")


def compile_gate(gate: GateOp, config: PhysicsConfig) -> PulseSchedule:
    if gate.kind == "ROT":
        return compile_rotation(gate.qubits[0], *gate.params, config)
    if gate.kind == "RZ":
        return compile_rz(gate.qubits[0], gate.params[0], config)
    if gate.kind == "CZ":
        return compile_cz(*gate.qubits, config)
    if gate.kind == "CNOT":
        return compile_cnot(*gate.qubits, config)
    raise ValueError(f"unknown gate kind {gate.kind!r}")


# ---------------------------------------------------------------------------
# golden phase tables


def _rabi_propagator(coupling: complex, energy: float, t: float) -> np.ndarray:
    """2x2 propagator of H = [[0, conj(c)], [c, energy]] (lower, upper)."""
    H = np.array([[0.0, np.conj(coupling)], [coupling, energy]], dtype=complex)
    return scipy.linalg.expm(-1j * t * H)


def compute_golden_tables(blockade_ratio: float = IDEAL_BLOCKADE_RATIO) -> dict[str, np.ndarray]:
    """Protocol phase tables from products of few-state pulse propagators.

    Works in units Omega = 1.  Entries are reduced to unit-modulus phases.  ``CZ`` lists the diagonal for inputs
    ``(b_i, b_j) = 00, 01, 10, 11``; ``ROT_THETA0`` is the diagonal of a zero
    angle rotation for ``b_i = 0, 1``.
    """
    t_pi = math.pi
    U = float(blockade_ratio)
    p1 = _rabi_propagator(0.5, 0.0, t_pi)
    p3 = _rabi_propagator(0.5 * np.exp(1j * math.pi), 0.0, t_pi)
    # branch 11: states (b_i=1, n_r=0), (b_i=0, n_r=1), (b_i=0, b_j=0, n_r=1, n_r'=1)
    P1 = np.eye(3, dtype=complex)
    P1[:2, :2] = p1
    P3 = np.eye(3, dtype=complex)
    P3[:2, :2] = p3
    P2 = np.eye(3, dtype=complex)
    P2[1:, 1:] = _rabi_propagator(0.5, U, 2 * t_pi)
    amp11 = (P3 @ P2 @ P1)[0, 0]
    amp01 = _rabi_propagator(0.5, 0.0, 2 * t_pi)[0, 0]
    amp10 = (p3 @ p1)[0, 0]
    cz = np.array([1.0, amp01, amp10, amp11], dtype=complex)
    rot0 = np.array([1.0, (p3 @ p1)[0, 0]], dtype=complex)
    # keep phases only; the finite-U population loss is not part of the reference gate
    return {"CZ": cz / np.abs(cz), "ROT_THETA0": rot0 / np.abs(rot0)}


GOLDEN_VERSION = 1


def format_golden_tables(tables: Mapping[str, np.ndarray]) -> str:
    lines = [
        f"# golden phase tables, version {GOLDEN_VERSION}",
        f"# blockade ratio U/Omega = {IDEAL_BLOCKADE_RATIO:g}; entries are diagonal amplitudes",
        "# name  re_0 im_0  re_1 im_1 ...",
    ]
    for name, entries in tables.items():
        parts = [name]
        for z in entries:
            # drop round-off so exact phases read as exact
            re_, im_ = (0.0 if abs(x) < 1e-13 else x for x in (z.real, z.imag))
            parts += [f"{re_:.12g}", f"{im_:.12g}"]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_golden_tables(text: str) -> dict[str, np.ndarray]:
    tables = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, *nums = line.split()
        vals = [float(x) for x in nums]
        tables[name] = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    return tables


@lru_cache(maxsize=1)
def load_golden_tables() -> dict[str, np.ndarray]:
    text = resources.files("rydberg_ensemble").joinpath("data/golden_tables.txt").read_text()
    return parse_golden_tables(text)


# ---------------------------------------------------------------------------
# ideal register action


def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -1j * np.exp(-1j * phi) * s], [-1j * np.exp(1j * phi) * s, c]], dtype=complex
    )


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _apply_single(tensor: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(matrix, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def apply_ideal_gate(gate: GateOp, vector: np.ndarray, qubit_count: int, tables=None) -> np.ndarray:
    """Reference action of ``gate`` on register vectors (last axis of size 2^N)."""
    tables = load_golden_tables() if tables is None else tables
    vector = np.asarray(vector, dtype=complex)
    extra = vector.shape[:-1]
    t = vector.reshape(extra + (2,) * qubit_count)
    off = len(extra)
    if gate.kind == "ROT":
        t = _apply_single(t, rotation_matrix(*gate.params), off + gate.qubits[0] - 1)
    elif gate.kind == "RZ":
        t = _apply_single(t, rz_matrix(gate.params[0]), off + gate.qubits[0] - 1)
    elif gate.kind in ("CZ", "CNOT"):
        i, j = (q - 1 + off for q in gate.qubits)
        half = rotation_matrix(math.pi / 2, _CNOT_AXIS)
        if gate.kind == "CNOT":
            t = _apply_single(t, half, j)
        shape = [1] * t.ndim
        shape[i] = shape[j] = 2
        table = np.asarray(tables["CZ"]).reshape(2, 2)
        if i > j:
            table = table.T
        t = t * table.reshape(shape)
        if gate.kind == "CNOT":
            t = _apply_single(t, half, j)
    else:
        raise ValueError(f"unknown gate kind {gate.kind!r}")
    return t.reshape(vector.shape)


def ideal_register_unitary(gate: GateOp, qubit_count: int, tables=None) -> np.ndarray:
    """Dense 2^N x 2^N reference unitary of ``gate``."""
    gate.validate(qubit_count)
    d = 2**qubit_count
    # rows of the identity are the input basis vectors; transpose to columns
    return apply_ideal_gate(gate, np.eye(d, dtype=complex), qubit_count, tables).T


# ---------------------------------------------------------------------------
# simulation and fidelity


def simulate_schedule(amplitudes: np.ndarray, schedule: PulseSchedule, config: PhysicsConfig) -> np.ndarray:
    """Propagate amplitudes (vector or column matrix) through every pulse."""
    basis = config.basis
    out = np.asarray(amplitudes, dtype=complex)
    for pulse in schedule.pulses:
        if pulse.source_level == 0 and config.reservoir_rabi_scale != 1.0:
            pulse = replace(pulse, rabi_frequency=pulse.rabi_frequency * config.reservoir_rabi_scale)
        crosstalk = None
        if config.crosstalk:
            crosstalk = config.crosstalk.get((pulse.source_level, pulse.rydberg_level))
        out = apply_pulse(out, basis, pulse, config.blockade, config.decay, crosstalk)
    return out


def register_process_matrix(schedule: PulseSchedule, config: PhysicsConfig) -> np.ndarray:
    """Register block of the simulated map: column k is the output for input k."""
    basis = config.basis
    idx = basis.computational
    if np.any(idx < 0):
        raise InvalidDimensionsError("every register state must be representable (need K >= N)")
    psi0 = np.zeros((basis.dim, len(idx)), dtype=complex)
    psi0[idx, np.arange(len(idx))] = 1.0
    psi = simulate_schedule(psi0, schedule, config)
    return psi[idx, :]


def superposition_probes(qubit_count: int, count: int = 8, seed: int = 20240917) -> np.ndarray:
    """Fixed set of Haar-random register states, one per row."""
    rng = np.random.default_rng(seed)
    d = 2**qubit_count
    z = rng.normal(size=(count, d)) + 1j * rng.normal(size=(count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass
class GateFidelity:
    average: float
    worst: float
    leakage: float
    basis_fidelities: np.ndarray
    probe_fidelities: np.ndarray
    matrix: np.ndarray

    @property
    def worst_basis(self) -> float:
        return float(self.basis_fidelities.min())


def process_fidelity(M: np.ndarray, reference: np.ndarray, probes: np.ndarray | None = None) -> GateFidelity:
    """Compare a (possibly non-unitary) register map ``M`` with ``reference``.

    ``average`` is the average gate fidelity over the Haar measure,
    ``(Tr(M M^+) + |Tr(U^+ M)|^2) / (d (d + 1))``; ``worst`` is the minimum
    state fidelity over the computational basis and the superposition probes.
    """
    d = M.shape[0]
    avg = (np.vdot(M, M).real + abs(np.vdot(reference, M)) ** 2) / (d * (d + 1))
    basis_f = np.abs(np.einsum("ik,ik->k", reference.conj(), M)) ** 2
    if probes is None:
        probes = superposition_probes(int(round(math.log2(d))))
    probe_f = np.abs(np.einsum("pi,pi->p", (probes @ reference.T).conj(), probes @ M.T)) ** 2
    leakage = max(0.0, 1.0 - np.vdot(M, M).real / d)
    worst = float(min(basis_f.min(), probe_f.min() if len(probe_f) else 1.0))
    return GateFidelity(float(avg), worst, float(leakage), basis_f, probe_f, M)


def gate_fidelity(schedule: PulseSchedule, reference: np.ndarray, config: PhysicsConfig, probes=None) -> GateFidelity:
    """Simulate ``schedule`` from every register input and score it against ``reference``."""
    M = register_process_matrix(schedule, config)
    return process_fidelity(M, reference, probes)
