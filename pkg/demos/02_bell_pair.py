"""Compile a Bell-pair circuit to pulses and run it under two scenarios."""

from pathlib import Path

from rydberg_ensemble import RunConfig, compile_gate, parse_circuit, run_circuit

here = Path(__file__).parent
circuit = parse_circuit((here / "circuits" / "bell.circ").read_text())

ideal = RunConfig.ideal(atoms=20, qubits=2)
phys = ideal.physics(circuit.qubit_count)
print("pulse schedule")
for op in circuit.ops:
    sched = compile_gate(op, phys)
    print(f"  {sched.label}: {len(sched)} pulses, {sched.total_duration:.4f} us")
    for p in sched.pulses:
        sub = "r'" if p.rydberg_level else "r"
        print(f"    level {p.source_level} -> {sub}  t={p.duration:.4f} us  phase={p.phase:+.4f}")

print()
print("ideal parameters")
print(run_circuit(circuit, ideal, "00", samples=1000, seed=1).to_text(threshold=1e-12))

print("cesium reference scenario with 20 atoms")
print(run_circuit(circuit, RunConfig(atoms=20, qubits=2), "00", samples=1000, seed=1).to_text(threshold=1e-12))
