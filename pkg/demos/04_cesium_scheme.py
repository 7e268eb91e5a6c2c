"""Cesium numbers: pair interaction, Zeeman selectivity and blockade of a cloud."""

from rydberg_ensemble import (
    TWO_PI,
    TrapGeometry,
    blockade_statistics,
    default_forster_params,
    degenerate_transition_check,
    emit_interaction_curve,
    load_level_scheme,
    zeeman_selectivity,
)

params = default_forster_params(70)
print(f"C3 = {params.c3:.4f} GHz um^3, energy defect = {params.delta / TWO_PI:.2f} MHz")
print(emit_interaction_curve(params, [2, 3, 4, 5, 6, 8, 10]))

scheme = load_level_scheme(field_gauss=15.0)
rep = zeeman_selectivity(scheme, TWO_PI * 1.0)
print(f"{len(scheme.usable)} usable ground states -> {scheme.register_capacity} qubits")
print(f"closest transitions {rep.min_separation_mhz:.3f} MHz apart; "
      f"off-resonant excitation peak {rep.peak_probability:.4f}, mean {rep.mean_probability:.4f}")
print("degenerate pairs without the exclusion:", degenerate_transition_check(scheme.without_exclusions()))
print("degenerate pairs with it:", degenerate_transition_check(scheme))
print()

for shape in ("box", "sphere", "gaussian-cloud"):
    stats = blockade_statistics(TrapGeometry(shape, 5.0, 300), params, samples=100, seed=0)
    print(f"300 atoms, 5 um {shape:14s}: median weakest pair {stats.median / TWO_PI:7.1f} MHz, "
          f"10% quantile {stats.quantile(0.1) / TWO_PI:7.1f} MHz")
