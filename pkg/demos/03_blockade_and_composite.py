"""Two error mechanisms and how they scale.

A finite blockade shift U lets the blocked branch of the phase gate pick up
a light shift, so the CZ infidelity falls as (Omega / U)^2.  The collective
enhancement depends on how many atoms remain in the reservoir, which differs
between register branches; a BB1 composite pulse cancels this to high order.
"""

import math

from rydberg_ensemble import (
    CalibrationPolicy,
    GateOp,
    PhysicsConfig,
    RunConfig,
    compile_gate,
    gate_fidelity,
    ideal_register_unitary,
    mhz,
    parse_circuit,
    sweep,
)
from rydberg_ensemble.runner import loglog_slope

cz = parse_circuit("qubits 2\nCZ 1 2\n")
grid = [30, 100, 300, 1000]
csv, rows = sweep("U", grid, cz, RunConfig.ideal(atoms=20, qubits=2))
print(csv)
print(f"log-log slope of infidelity: {loglog_slope(grid, [1 - r[1] for r in rows]):.3f}\n")

gate = GateOp.rot(1, math.pi, 0.0)
print(" K    worst-branch infidelity   plain     BB1")
for K in (8, 20, 80):
    out = []
    for mode in ("none", "amplitude-robust"):
        cfg = PhysicsConfig(K, 4, rabi_frequency=mhz(1.0), aux_rydberg_cap=0,
                            calibration=CalibrationPolicy(composite_mode=mode))
        res = gate_fidelity(compile_gate(gate, cfg), ideal_register_unitary(gate, 4), cfg)
        out.append(1 - res.worst_basis)
    print(f"{K:3d}                              {out[0]:.2e}  {out[1]:.2e}")
