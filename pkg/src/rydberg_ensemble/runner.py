"""Circuit execution, error budgets, parameter sweeps and CSV/report output.

User-facing quantities are ordinary frequencies (MHz), gauss, um and us;
they are converted to the simulator's rad/us on the way in.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit
from .dynamics import TWO_PI, BlockadeModel, DecayModel
from .errors import InvalidDimensionsError, UnknownParameterError
from .fock import EnsembleState, encode_register, register_distribution
from .physics import (
    crosstalk_detunings,
    default_forster_params,
    forster_curve,
    load_level_scheme,
    rydberg_lifetime,
    zeeman_selectivity,
)
from .protocols import (
    IDEAL_BLOCKADE_RATIO,
    CalibrationPolicy,
    PhysicsConfig,
    PulseSchedule,
    apply_ideal_gate,
    compile_gate,
    gate_fidelity,
    ideal_blockade,
    simulate_schedule,
)

MAX_QUBITS = 14


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; defaults describe the Cs reference scenario."""

    atoms: int = 100
    qubits: int = MAX_QUBITS
    rabi_mhz: float = 1.0
    blockade: str = "forster"  # fixed | forster
    blockade_mhz: float = 80.0
    c3_ghz_um3: float | None = None
    forster_delta_mhz: float | None = None
    pair_distance_um: float = 5.0
    blockade_sign: int = 1
    rydberg_n: int = 70
    field_gauss: float = 15.0
    decay: str = "lifetime"  # none | lifetime | rate
    gamma_per_us: float = 0.0
    tau_ref_us: float | None = None
    register_cap: int = 1
    rydberg_cap: int = 2
    reference_occupancy: int | None = None
    composite: str = "none"
    exact_calibration: bool = False
    crosstalk: str = "bound"  # off | bound | simulate
    readout_flip: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.atoms < 2 or self.qubits < 1 or self.rabi_mhz <= 0:
            raise InvalidDimensionsError("atoms >= 2, qubits >= 1 and rabi_mhz > 0 are required")
        if self.blockade not in ("fixed", "forster"):
            raise ValueError("blockade must be 'fixed' or 'forster'")
        if self.decay not in ("none", "lifetime", "rate"):
            raise ValueError("decay must be 'none', 'lifetime' or 'rate'")
        if self.crosstalk not in ("off", "bound", "simulate"):
            raise ValueError("crosstalk must be 'off', 'bound' or 'simulate'")
        if self.field_gauss < 0 or self.gamma_per_us < 0 or not 0 <= self.readout_flip <= 0.5:
            raise ValueError("field_gauss, gamma_per_us must be >= 0 and readout_flip in [0, 0.5]")

    @classmethod
    def ideal(cls, **overrides) -> RunConfig:
        """Blockade at U/Omega = 1e6, no decay, exact calibration, no crosstalk."""
        rabi = overrides.get("rabi_mhz", 1.0)
        base = dict(
            blockade="fixed",
            blockade_mhz=IDEAL_BLOCKADE_RATIO * rabi,
            decay="none",
            exact_calibration=True,
            crosstalk="off",
        )
        base.update(overrides)
        return cls(**base)

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    @property
    def rabi_frequency(self) -> float:
        return TWO_PI * self.rabi_mhz

    def blockade_model(self) -> BlockadeModel:
        if self.blockade == "fixed":
            return BlockadeModel.fixed(TWO_PI * self.blockade_mhz, sign=self.blockade_sign)
        params = default_forster_params(self.rydberg_n)
        c3 = params.c3 if self.c3_ghz_um3 is None else self.c3_ghz_um3
        delta = params.delta if self.forster_delta_mhz is None else TWO_PI * self.forster_delta_mhz
        return BlockadeModel.forster(c3, delta, self.pair_distance_um, sign=self.blockade_sign)

    def decay_model(self) -> DecayModel:
        if self.decay == "none":
            return DecayModel(0.0)
        if self.decay == "rate":
            return DecayModel(self.gamma_per_us)
        return DecayModel(rydberg_lifetime(self.rydberg_n, self.tau_ref_us))

    def level_scheme(self):
        return load_level_scheme(field_gauss=self.field_gauss, rydberg_n=self.rydberg_n)

    def physics(self, qubit_count: int | None = None, two_qubit: bool = True) -> PhysicsConfig:
        """Simulator configuration for a register of ``qubit_count`` levels."""
        N = self.qubits if qubit_count is None else qubit_count
        if N > self.qubits:
            raise InvalidDimensionsError(f"circuit needs {N} qubits, configuration allows {self.qubits}")
        if self.atoms < N + 1:
            raise InvalidDimensionsError(f"need at least N+1 = {N + 1} atoms, got {self.atoms}")
        crosstalk = None
        if self.crosstalk == "simulate":
            if not self.field_gauss > 0:
                raise ValueError("crosstalk simulation needs a positive field")
            crosstalk = crosstalk_detunings(self.level_scheme(), N)
        return PhysicsConfig(
            atom_count=self.atoms,
            qubit_count=N,
            rabi_frequency=self.rabi_frequency,
            blockade=self.blockade_model(),
            decay=self.decay_model(),
            register_cap=self.register_cap,
            rydberg_cap=self.rydberg_cap,
            aux_rydberg_cap=1 if two_qubit else 0,
            calibration=CalibrationPolicy(self.reference_occupancy, self.composite, self.exact_calibration),
            crosstalk=crosstalk,
        )


_BOOL = {"true": True, "yes": True, "1": True, "on": True, "false": False, "no": False, "0": False, "off": False}


def _coerce(name: str, text: str):
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    if name not in fields:
        raise UnknownParameterError(f"unknown configuration key {name!r}")
    default = fields[name].default
    text = text.strip()
    if text.lower() in ("none", "null", "") and default is None:
        return None
    if isinstance(default, bool):
        if text.lower() not in _BOOL:
            raise ValueError(f"{name}: expected a boolean, got {text!r}")
        return _BOOL[text.lower()]
    if isinstance(default, int) or name in ("reference_occupancy",):
        return int(text)
    if isinstance(default, float) or name in ("c3_ghz_um3", "forster_delta_mhz", "tau_ref_us"):
        return float(text)
    return text


def parse_run_config(text: str, overrides: dict[str, str] | None = None, base: RunConfig | None = None) -> RunConfig:
    """Read ``key = value`` lines (``#`` comments); ``overrides`` win over the file."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, _, value = line.partition(" ")
        values[key.strip()] = _coerce(key.strip(), value)
    for key, value in (overrides or {}).items():
        values[key] = _coerce(key, str(value))
    return dataclasses.replace(base or RunConfig(), **values)


def load_run_config(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    text = ""
    if path is not None:
        with open(path) as fh:
            text = fh.read()
    return parse_run_config(text, overrides)


def format_run_config(config: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        lines.append(f"{f.name} = {getattr(config, f.name)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# running circuits


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _num(x: float) -> float:
    return float(_fmt(x))


@dataclass
class RunReport:
    qubit_count: int
    initial: str
    distribution: dict[str, float]
    leakage: float
    gate_fidelities: list[tuple[str, float]]
    final_fidelity: float
    error_budget: dict[str, float]
    basis_dim: int
    samples: dict[str, int] | None = None
    wall_time_s: float = 0.0
    metadata: dict = field(default_factory=dict)

    def total_probability(self) -> float:
        return float(sum(self.distribution.values()) + self.leakage)

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "qubit_count": self.qubit_count,
            "initial": self.initial,
            "basis_dim": self.basis_dim,
            "distribution": {k: _num(v) for k, v in sorted(self.distribution.items())},
            "leakage": _num(self.leakage),
            "final_fidelity": _num(self.final_fidelity),
            "gate_fidelities": [[label, _num(f)] for label, f in self.gate_fidelities],
            "error_budget": {k: _num(v) for k, v in self.error_budget.items()},
        }
        if self.samples is not None:
            out["samples"] = dict(sorted(self.samples.items()))
        out.update(self.metadata)
        if timing:
            out["wall_time_s"] = _num(self.wall_time_s)
        return out

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2) + "\n"

    def to_text(self, timing: bool = False, threshold: float = 0.0) -> str:
        d = self.to_dict(timing)
        lines = [
            f"register: {self.qubit_count} qubits, initial |{self.initial}>, basis dimension {self.basis_dim}",
            "distribution:",
        ]
        for k, v in self.distribution.items():
            if v > threshold:
                lines.append(f"  {k}  {_fmt(v)}")
        lines.append(f"leakage: {_fmt(self.leakage)}")
        lines.append(f"final fidelity vs ideal: {_fmt(self.final_fidelity)}")
        lines.append("gate fidelities:")
        for label, f in self.gate_fidelities:
            lines.append(f"  {label}: {_fmt(f)}")
        lines.append("error budget:")
        for k, v in self.error_budget.items():
            lines.append(f"  {k}: {_fmt(v)}")
        if self.samples is not None:
            lines.append("samples:")
            for k, v in d["samples"].items():
                lines.append(f"  {k}  {v}")
        if timing:
            lines.append(f"wall time: {_fmt(self.wall_time_s)} s")
        return "\n".join(lines) + "\n"


def _ideal_physics(phys: PhysicsConfig) -> PhysicsConfig:
    return phys.replace(
        blockade=ideal_blockade(phys.rabi_frequency),
        decay=DecayModel(0.0),
        calibration=dataclasses.replace(phys.calibration, exact=True),
        crosstalk=None,
        reservoir_rabi_scale=1.0,
    )


def _apply_readout_flips(probs: np.ndarray, q: float, N: int) -> np.ndarray:
    if q == 0:
        return probs
    flip = np.array([[1 - q, q], [q, 1 - q]])
    t = probs.reshape((2,) * N)
    for axis in range(N):
        t = np.moveaxis(np.tensordot(flip, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def _simulate_circuit(circuit: Circuit, phys: PhysicsConfig, initial: str):
    basis = phys.basis
    amps = encode_register(basis, initial).amplitudes
    schedules = [compile_gate(op, phys) for op in circuit.ops]
    gate_fids = []
    for op, sched in zip(circuit.ops, schedules):
        prev = EnsembleState(basis, amps).register_vector()
        amps = simulate_schedule(amps, sched, phys)
        norm = np.linalg.norm(prev)
        ideal = apply_ideal_gate(op, prev / norm, circuit.qubit_count) if norm > 0 else prev
        actual = EnsembleState(basis, amps).register_vector()
        gate_fids.append((sched.label, float(abs(np.vdot(ideal, actual)) ** 2)))
    return EnsembleState(basis, amps), gate_fids, schedules


def _ideal_register(circuit: Circuit, initial: str) -> np.ndarray:
    vec = np.zeros(2**circuit.qubit_count, dtype=complex)
    vec[int(initial, 2) if initial else 0] = 1.0
    for op in circuit.ops:
        vec = apply_ideal_gate(op, vec, circuit.qubit_count)
    return vec


def _has_two_qubit(circuit: Circuit) -> bool:
    return any(op.kind in ("CZ", "CNOT") for op in circuit.ops)


def run_circuit(
    circuit: Circuit,
    config: RunConfig,
    initial: str | None = None,
    samples: int = 0,
    seed: int | None = None,
    budget: bool = True,
) -> RunReport:
    """Simulate ``circuit`` from the register state ``initial``.

    The error budget repeats the run with exactly one imperfection switched on
    (all others ideal): leakage with the configured blockade, norm lost to
    decay, infidelity from the collective-coupling spread, and Zeeman
    crosstalk (analytic bound, or a co-simulation when ``crosstalk=simulate``).
    """
    t0 = time.perf_counter()
    N = circuit.qubit_count
    initial = "0" * N if initial is None else initial
    if len(initial) != N or any(c not in "01" for c in initial):
        raise ValueError(f"initial state must be a bitstring of length {N}")
    for op in circuit.ops:
        op.validate(N)
    phys = config.physics(N, two_qubit=_has_two_qubit(circuit))

    final, gate_fids, schedules = _simulate_circuit(circuit, phys, initial)
    probs, leakage = register_distribution(final)
    target = _ideal_register(circuit, initial)
    final_fid = float(abs(np.vdot(target, final.register_vector())) ** 2)

    if config.readout_flip > 0:
        keys = list(probs)
        arr = np.array([probs[k] for k in keys])
        arr = _apply_readout_flips(arr, config.readout_flip, N)
        probs = dict(zip(keys, arr.tolist()))

    error_budget = {}
    if budget:
        error_budget = _error_budget(circuit, config, phys, initial, target, schedules)

    counts = None
    if samples:
        rng = np.random.default_rng(config.seed if seed is None else seed)
        labels = list(probs) + ["leak"]
        p = np.array([probs[k] for k in probs] + [leakage])
        p = np.clip(p, 0, None)
        draws = rng.multinomial(samples, p / p.sum())
        counts = {k: int(c) for k, c in zip(labels, draws) if c}

    return RunReport(
        qubit_count=N,
        initial=initial,
        distribution=probs,
        leakage=leakage,
        gate_fidelities=gate_fids,
        final_fidelity=final_fid,
        error_budget=error_budget,
        basis_dim=phys.basis.dim,
        samples=counts,
        wall_time_s=time.perf_counter() - t0,
    )


def _error_budget(circuit, config, phys, initial, target, schedules) -> dict[str, float]:
    ideal = _ideal_physics(phys)

    def run(p):
        state, _, _ = _simulate_circuit(circuit, p, initial)
        return state

    blockade_state = run(ideal.replace(blockade=phys.blockade))
    decay_state = run(ideal.replace(decay=phys.decay))
    inhom_state = run(ideal.replace(calibration=phys.calibration))
    budget = {
        "blockade_leakage": register_distribution(blockade_state)[1] - (1.0 - blockade_state.norm2),
        "decay_loss": 1.0 - decay_state.norm2,
        "inhomogeneity_infidelity": 1.0 - abs(np.vdot(target, inhom_state.register_vector())) ** 2,
    }
    if config.crosstalk == "simulate":
        xt_state = run(ideal.replace(crosstalk=phys.crosstalk))
        budget["zeeman_crosstalk"] = 1.0 - abs(np.vdot(target, xt_state.register_vector())) ** 2
    elif config.crosstalk == "bound" and config.field_gauss > 0:
        n_pulses = sum(len(s) for s in schedules)
        peak = zeeman_selectivity(config.level_scheme(), phys.rabi_frequency).peak_probability
        budget["zeeman_crosstalk"] = min(1.0, n_pulses * peak)
    else:
        budget["zeeman_crosstalk"] = 0.0
    return {k: max(0.0, float(v)) for k, v in budget.items()}


# ---------------------------------------------------------------------------
# sweeps and CSV output

SWEEP_AXES = {
    "U": "blockade_mhz",
    "K": "atoms",
    "B": "field_gauss",
    "Omega": "rabi_mhz",
    "n": "rydberg_n",
}
_AXIS_ALIASES = {"Ω": "Omega", "omega": "Omega", "u": "U", "k": "K", "b": "B"}

# sweeps build dense 2^N x 2^N process matrices
MAX_SWEEP_QUBITS = 10


def format_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def circuit_schedule(circuit: Circuit, phys: PhysicsConfig) -> PulseSchedule:
    sched = PulseSchedule((), "")
    for op in circuit.ops:
        sched = sched + compile_gate(op, phys)
    return sched


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    d = 2**circuit.qubit_count
    out = np.eye(d, dtype=complex)
    for op in circuit.ops:
        out = apply_ideal_gate(op, out, circuit.qubit_count)
    return out.T


def config_for_axis(config: RunConfig, axis: str, value: float) -> RunConfig:
    axis = _AXIS_ALIASES.get(axis, axis)
    if axis not in SWEEP_AXES:
        raise UnknownParameterError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    if axis == "U":
        return config.replace(blockade="fixed", blockade_mhz=float(value))
    if axis == "K":
        return config.replace(atoms=int(round(value)))
    if axis == "B":
        # the field only acts through the crosstalk co-simulation
        return config.replace(field_gauss=float(value), crosstalk="simulate")
    if axis == "Omega":
        return config.replace(rabi_mhz=float(value))
    return config.replace(rydberg_n=int(round(value)))


def _sweep_point(args):
    circuit, config = args
    phys = config.physics(circuit.qubit_count, two_qubit=_has_two_qubit(circuit))
    res = gate_fidelity(circuit_schedule(circuit, phys), circuit_unitary(circuit), phys)
    return res.average, res.worst, res.leakage


def sweep(axis: str, grid, circuit: Circuit, config: RunConfig, workers: int = 1):
    """Gate fidelity of the whole circuit at each grid value.

    Returns ``(csv_text, rows)`` with rows ``(value, average fidelity, worst
    fidelity, leakage)``.  Axes: ``U`` (blockade shift, MHz), ``K`` (atoms),
    ``B`` (gauss, enables crosstalk co-simulation), ``Omega`` (MHz), ``n``.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("grid must not be empty")
    if circuit.qubit_count > MAX_SWEEP_QUBITS:
        raise InvalidDimensionsError(f"sweeps support at most {MAX_SWEEP_QUBITS} qubits")
    canonical = _AXIS_ALIASES.get(axis, axis)
    configs = [config_for_axis(config, axis, v) for v in grid]
    jobs = [(circuit, c) for c in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    rows = [(v, *r) for v, r in zip(grid, results)]
    header = (canonical, "avg_fidelity", "worst_fidelity", "leakage")
    return format_csv(header, rows), rows


def emit_interaction_curve(params, r_grid) -> str:
    """CSV ``r_um,U_MHz`` in the order of ``r_grid``."""
    rows = [(r, u / TWO_PI) for r, u in forster_curve(params, r_grid)]
    return format_csv(("r_um", "U_MHz"), rows)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
