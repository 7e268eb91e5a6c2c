import json
import math

import numpy as np
import pytest

from rydberg_ensemble.circuit import parse_circuit
from rydberg_ensemble.errors import InvalidDimensionsError, UnknownParameterError
from rydberg_ensemble.physics import ForsterParams, default_forster_params
from rydberg_ensemble.runner import (
    RunConfig,
    circuit_unitary,
    config_for_axis,
    emit_interaction_curve,
    format_run_config,
    loglog_slope,
    parse_run_config,
    run_circuit,
    sweep,
)

BELL = parse_circuit(f"qubits 2\nROT 1 {math.pi / 2!r} {math.pi / 2!r}\nCNOT 1 2\nmeasure\n")
IDEAL = RunConfig.ideal(atoms=20, qubits=4)


def test_pi_rotation_flips_first_qubit():
    c = parse_circuit(f"qubits 2\nROT 1 {math.pi!r} 0\n")
    r = run_circuit(c, IDEAL, "00")
    assert r.distribution["10"] == pytest.approx(1.0, abs=1e-9)


def test_bell_state():
    r = run_circuit(BELL, IDEAL, "00")
    assert r.distribution["00"] == pytest.approx(0.5, abs=1e-6)
    assert r.distribution["11"] == pytest.approx(0.5, abs=1e-6)
    assert r.leakage <= 1e-8
    assert r.final_fidelity >= 1 - 1e-8
    assert [label for label, _ in r.gate_fidelities] == [
        f"ROT 1 {math.pi / 2!r} {math.pi / 2!r}",
        "CNOT 1 2",
    ]


def test_empty_circuit_is_identity():
    r = run_circuit(parse_circuit("qubits 4\n"), IDEAL, "0110")
    assert r.distribution["0110"] == 1.0
    assert r.leakage == 0.0


def test_circuit_unitary_matches_textbook_bell():
    U = circuit_unitary(BELL)
    out = U[:, 0]
    assert abs(out[0]) ** 2 == pytest.approx(0.5) and abs(out[3]) ** 2 == pytest.approx(0.5)


@pytest.mark.parametrize(
    "config",
    [
        RunConfig(atoms=20, qubits=2),
        RunConfig(atoms=20, qubits=2, decay="rate", gamma_per_us=0.05, readout_flip=0.02),
        RunConfig(atoms=20, qubits=2, blockade="fixed", blockade_mhz=5.0, blockade_sign=-1),
    ],
)
def test_probability_closure(config):
    r = run_circuit(BELL, config, "01", samples=50, seed=1)
    assert sum(r.distribution.values()) + r.leakage == pytest.approx(1.0, abs=1e-8)
    assert sum(r.samples.values()) == 50


def test_reports_are_deterministic():
    cfg = RunConfig(atoms=20, qubits=2)
    a = run_circuit(BELL, cfg, "00", samples=100, seed=4)
    b = run_circuit(BELL, cfg, "00", samples=100, seed=4)
    assert a.to_json() == b.to_json()
    assert a.to_text() == b.to_text()
    c = run_circuit(BELL, cfg, "00", samples=100, seed=5)
    assert a.distribution == c.distribution


def test_text_and_json_share_numbers():
    r = run_circuit(BELL, RunConfig(atoms=20, qubits=2), "00")
    data = json.loads(r.to_json())
    text = r.to_text()
    assert f"leakage: {data['leakage']:.12g}" in text
    for key, value in data["error_budget"].items():
        assert f"{key}: {value:.12g}" in text
    assert "wall_time_s" not in data
    assert "wall_time_s" in json.loads(r.to_json(timing=True))


def test_error_budget_ideal_and_single_imperfections():
    c = parse_circuit(f"qubits 2\nROT 1 {math.pi / 2!r} 0.3\nCNOT 1 2\n")
    base = RunConfig.ideal(atoms=20, qubits=2)
    budget = run_circuit(c, base).error_budget
    assert set(budget) == {"blockade_leakage", "decay_loss", "inhomogeneity_infidelity", "zeeman_crosstalk"}
    assert all(v <= 1e-8 for v in budget.values())
    cases = {
        "blockade_leakage": dict(blockade_mhz=20.0),
        "decay_loss": dict(decay="rate", gamma_per_us=0.01),
        "inhomogeneity_infidelity": dict(exact_calibration=False),
        "zeeman_crosstalk": dict(crosstalk="bound"),
    }
    for component, change in cases.items():
        budget = run_circuit(c, base.replace(**change)).error_budget
        above = {k for k, v in budget.items() if v > 1e-8}
        assert above == {component}, (change, budget)


def test_crosstalk_bound_dominates_simulation():
    c = parse_circuit(f"qubits 2\nROT 1 {math.pi / 2!r} 0.3\nCNOT 1 2\n")
    base = RunConfig.ideal(atoms=20, qubits=2)
    bound = run_circuit(c, base.replace(crosstalk="bound")).error_budget["zeeman_crosstalk"]
    simulated = run_circuit(c, base.replace(crosstalk="simulate")).error_budget["zeeman_crosstalk"]
    assert 0 < simulated <= bound


def test_readout_flip_moves_weight():
    c = parse_circuit("qubits 2\n")
    r = run_circuit(c, IDEAL.replace(readout_flip=0.1), "00", budget=False)
    assert r.distribution["00"] == pytest.approx(0.81)
    assert r.distribution["01"] == pytest.approx(0.09)
    assert r.distribution["11"] == pytest.approx(0.01)


def test_samples_follow_distribution():
    r = run_circuit(BELL, IDEAL, "00", samples=4000, seed=2)
    assert set(r.samples) <= {"00", "11", "01", "10", "leak"}
    assert r.samples["00"] / 4000 == pytest.approx(0.5, abs=0.05)


def test_run_errors():
    with pytest.raises(ValueError):
        run_circuit(BELL, IDEAL, "0")
    with pytest.raises(InvalidDimensionsError):
        run_circuit(BELL, RunConfig.ideal(atoms=20, qubits=1), "00")
    with pytest.raises(InvalidDimensionsError):
        RunConfig(atoms=2, qubits=2).physics()


def test_config_parsing():
    cfg = parse_run_config("# scenario\natoms = 30\nblockade = fixed\nexact_calibration = yes\nreference_occupancy = 29\n")
    assert cfg.atoms == 30 and cfg.blockade == "fixed" and cfg.exact_calibration is True
    assert cfg.reference_occupancy == 29
    cfg = parse_run_config("atoms = 30\n", overrides={"atoms": "40", "rabi_mhz": "2.5"})
    assert cfg.atoms == 40 and cfg.rabi_mhz == 2.5
    assert parse_run_config(format_run_config(cfg)) == cfg
    with pytest.raises(UnknownParameterError):
        parse_run_config("atomz = 3\n")
    with pytest.raises(ValueError):
        parse_run_config("decay = sometimes\n")


def test_defaults_describe_reference_scenario():
    cfg = RunConfig()
    assert (cfg.atoms, cfg.qubits, cfg.rabi_mhz, cfg.field_gauss, cfg.rydberg_n) == (100, 14, 1.0, 15.0, 70)
    phys = cfg.physics(2)
    assert phys.blockade.mode == "forster"
    assert phys.decay.rydberg_linewidth > 0


def test_sweep_rows_and_format():
    cz = parse_circuit("qubits 2\nCZ 1 2\n")
    cfg = RunConfig.ideal(atoms=8, qubits=2)
    csv, rows = sweep("U", [300.0], cz, cfg)
    lines = csv.split("\n")
    assert lines[0] == "U,avg_fidelity,worst_fidelity,leakage"
    assert len(rows) == 1 and lines[2] == ""
    assert "\r" not in csv
    for field in lines[1].split(","):
        assert field == f"{float(field):.12g}"
    with pytest.raises(UnknownParameterError):
        sweep("T", [1.0], cz, cfg)
    with pytest.raises(ValueError):
        sweep("U", [], cz, cfg)


def test_sweep_blockade_slope():
    cz = parse_circuit("qubits 2\nCZ 1 2\n")
    _, rows = sweep("U", [30, 100, 300, 1000], cz, RunConfig.ideal(atoms=8, qubits=2))
    infid = [1 - r[1] for r in rows]
    assert loglog_slope([r[0] for r in rows], infid) == pytest.approx(-2, abs=0.2)


def test_sweep_parallel_matches_serial():
    cz = parse_circuit("qubits 2\nCZ 1 2\n")
    cfg = RunConfig.ideal(atoms=8, qubits=2)
    serial, _ = sweep("Omega", [0.5, 1.0, 2.0], cz, cfg.replace(blockade_mhz=50.0))
    parallel, _ = sweep("Omega", [0.5, 1.0, 2.0], cz, cfg.replace(blockade_mhz=50.0), workers=2)
    assert serial == parallel


def test_axis_mapping():
    cfg = RunConfig()
    assert config_for_axis(cfg, "K", 20.0).atoms == 20
    assert config_for_axis(cfg, "U", 30.0).blockade == "fixed"
    assert config_for_axis(cfg, "B", 10.0).crosstalk == "simulate"
    assert config_for_axis(cfg, "Ω", 2.0).rabi_mhz == 2.0
    assert config_for_axis(cfg, "n", 80).rydberg_n == 80


def test_interaction_curve_csv():
    csv = emit_interaction_curve(default_forster_params(), [3.0, 5.0])
    assert csv == "r_um,U_MHz\n3,1000\n5,80\n"
    rows = [line.split(",") for line in emit_interaction_curve(ForsterParams(10.0, 0.0), [1.0, 2.0]).split("\n")[1:-1]]
    assert float(rows[1][1]) / float(rows[0][1]) == pytest.approx(1 / 8)
    desc = emit_interaction_curve(default_forster_params(), [5.0, 4.0, 3.0])
    assert [line.split(",")[0] for line in desc.split("\n")[1:-1]] == ["5", "4", "3"]


def test_loglog_slope():
    x = np.array([1.0, 10.0, 100.0])
    assert loglog_slope(x, 3 * x**-2) == pytest.approx(-2.0)
