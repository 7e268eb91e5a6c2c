"""Collective Rabi oscillations between the reservoir and the Rydberg level.

With k0 atoms in the reservoir and a blockade that forbids a second
excitation, the reservoir couples to the singly excited symmetric state with
strength sqrt(k0) * Omega / 2.  The oscillation therefore speeds up by sqrt(k0).
"""

import math

import numpy as np

from rydberg_ensemble import BlockadeModel, PulseSpec, build_hamiltonian, encode_register, enumerate_basis, mhz, propagate

omega = mhz(1.0)
blockade = BlockadeModel.fixed(mhz(1e6))

print(" k0   Rabi period (us)   2 pi / (sqrt(k0) Omega)")
for k0 in (1, 4, 25, 100):
    basis = enumerate_basis(k0, 1, (1, 2))
    H = build_hamiltonian(basis, PulseSpec(0, omega, 1.0), blockade)
    psi0 = encode_register(basis, "0").amplitudes
    ground = basis.position((0,), 0)

    # sample the reservoir population and read the period off its minima
    t = np.linspace(0, 2.5 / math.sqrt(k0), 4001)
    pop = np.array([abs(propagate(H, ti, psi0)[ground]) ** 2 for ti in t])
    minima = t[1:-1][(pop[1:-1] < pop[:-2]) & (pop[1:-1] < pop[2:])]
    period = minima[1] - minima[0] if len(minima) > 1 else float("nan")
    print(f"{k0:3d}   {period:16.5f}   {2 * math.pi / (math.sqrt(k0) * omega):16.5f}")
