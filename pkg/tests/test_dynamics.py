import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from rydberg_ensemble.dynamics import (
    TWO_PI,
    BlockadeModel,
    DecayModel,
    PulseSpec,
    apply_pulse,
    blockade_shift,
    build_hamiltonian,
    evolve,
    forster_shift,
    mhz,
    propagate,
    to_mhz,
)
from rydberg_ensemble.errors import NonpositiveDistanceError, UnknownLevelError
from rydberg_ensemble.fock import encode_register, enumerate_basis

OMEGA = TWO_PI
FREE = BlockadeModel.fixed(0.0)


def reservoir_state(basis):
    return encode_register(basis, "0" * basis.qubit_count)


def test_unit_helpers():
    assert mhz(1.0) == pytest.approx(TWO_PI)
    assert to_mhz(mhz(3.7)) == pytest.approx(3.7)


def test_collective_matrix_element():
    basis = enumerate_basis(100, 1, (1, 2))
    H = build_hamiltonian(basis, PulseSpec(0, OMEGA, 1.0), FREE).toarray()
    lo, up = basis.position((0,), 0), basis.position((0,), 1)
    assert H[up, lo] == pytest.approx(5 * OMEGA)
    assert H[lo, up] == pytest.approx(5 * OMEGA)
    # second excitation: sqrt(99 * 2) Omega / 2
    assert H[basis.position((0,), 2), up] == pytest.approx(0.5 * OMEGA * math.sqrt(198))


def test_single_atom_matrix_element_and_phase():
    basis = enumerate_basis(10, 2, (1, 2))
    H = build_hamiltonian(basis, PulseSpec(2, OMEGA, 1.0, phase=0.3), FREE).toarray()
    lo, up = basis.position((0, 1), 0), basis.position((0, 0), 1)
    assert H[up, lo] == pytest.approx(0.5 * OMEGA * np.exp(0.3j))
    assert H[lo, up] == pytest.approx(0.5 * OMEGA * np.exp(-0.3j))


@pytest.mark.parametrize("sign", [1, -1])
def test_blockade_and_detuning_diagonal(sign):
    basis = enumerate_basis(10, 1, (1, 2), 1)
    U = 123.0
    H = build_hamiltonian(basis, PulseSpec(0, OMEGA, 1.0, detuning=0.7), BlockadeModel.fixed(U, sign)).toarray()
    assert H[basis.position((0,), 2), basis.position((0,), 2)] == pytest.approx(sign * U - 1.4)
    assert H[basis.position((0,), 1), basis.position((0,), 1)] == pytest.approx(-0.7)
    # blockade acts on the total Rydberg number
    assert H[basis.position((0,), 1, 1), basis.position((0,), 1, 1)] == pytest.approx(sign * U - 0.7)
    np.testing.assert_allclose(H, H.conj().T)


def test_decay_diagonal_is_antihermitian():
    basis = enumerate_basis(5, 1, (1, 2))
    H = build_hamiltonian(basis, PulseSpec(0, OMEGA, 1.0), FREE, decay=DecayModel(0.4)).toarray()
    k = basis.position((0,), 2)
    assert H[k, k] == pytest.approx(-0.4j)


def test_unknown_level():
    basis = enumerate_basis(5, 2)
    with pytest.raises(UnknownLevelError):
        build_hamiltonian(basis, PulseSpec(3, OMEGA, 1.0), FREE)
    with pytest.raises(UnknownLevelError):
        build_hamiltonian(basis, PulseSpec(1, OMEGA, 1.0, rydberg_level=1), FREE)


def test_pulse_spec_validation():
    with pytest.raises(ValueError):
        PulseSpec(0, -1.0, 1.0)
    with pytest.raises(ValueError):
        PulseSpec(0, 1.0, -1.0)


@pytest.mark.parametrize("k0", [1, 4, 25, 100])
def test_pi_and_two_pi_pulses(k0):
    basis = enumerate_basis(k0, 1, (1, 1))
    psi = reservoir_state(basis)
    t_pi = math.pi / (math.sqrt(k0) * OMEGA)
    H = build_hamiltonian(basis, PulseSpec(0, OMEGA, t_pi), FREE)
    out = evolve(psi, H, t_pi)
    assert abs(out.amplitudes[basis.position((0,), 1)]) ** 2 == pytest.approx(1.0, abs=1e-12)
    out = evolve(psi, H, 2 * t_pi)
    assert out.amplitudes[basis.position((0,), 0)] == pytest.approx(-1.0, abs=1e-12)


def test_detuned_rabi_matches_closed_form():
    basis = enumerate_basis(1, 1, (1, 1))
    delta = 5.25 * TWO_PI
    H = build_hamiltonian(basis, PulseSpec(0, OMEGA, 1.0, detuning=delta), FREE)
    psi = reservoir_state(basis)
    gen = math.hypot(OMEGA, delta)
    for t in np.linspace(0.0, 0.5, 11):
        p = abs(evolve(psi, H, t).amplitudes[basis.position((0,), 1)]) ** 2
        expected = OMEGA**2 / gen**2 * math.sin(gen * t / 2) ** 2
        assert p == pytest.approx(expected, abs=1e-12)
    peak = abs(evolve(psi, H, math.pi / gen).amplitudes[basis.position((0,), 1)]) ** 2
    assert peak == pytest.approx(0.035, abs=5e-4)


@settings(max_examples=25, deadline=None)
@given(
    K=st.integers(2, 6),
    level=st.integers(0, 2),
    rabi=st.floats(0.1, 20.0),
    detuning=st.floats(-20.0, 20.0),
    phase=st.floats(0.0, 2 * math.pi),
    U=st.floats(-50.0, 50.0),
    t=st.floats(0.0, 3.0),
)
def test_block_propagation_matches_dense_expm(K, level, rabi, detuning, phase, U, t):
    basis = enumerate_basis(K, 2, (1, 2), 1)
    pulse = PulseSpec(level, rabi, t, detuning=detuning, phase=phase)
    H = build_hamiltonian(basis, pulse, BlockadeModel.fixed(U), crosstalk=[(3 - max(level, 1), 1.7)])
    rng = np.random.default_rng(0)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    expected = scipy.linalg.expm(-1j * t * H.toarray()) @ psi
    np.testing.assert_allclose(propagate(H, t, psi), expected, atol=1e-9)


def test_block_propagation_with_decay_matches_dense_expm():
    basis = enumerate_basis(4, 2, (1, 2), 1)
    H = build_hamiltonian(basis, PulseSpec(0, 3.0, 1.0), BlockadeModel.fixed(7.0), decay=DecayModel(0.5))
    psi = np.ones(basis.dim, complex)
    np.testing.assert_allclose(propagate(H, 0.8, psi), scipy.linalg.expm(-0.8j * H.toarray()) @ psi, atol=1e-12)


def test_propagation_at_exceptional_point():
    # g = Omega/2 and Gamma = 4 g make the 2x2 block defective
    basis = enumerate_basis(1, 1, (1, 1))
    H = build_hamiltonian(basis, PulseSpec(0, OMEGA, 1.0), FREE, decay=DecayModel(2 * OMEGA))
    psi = reservoir_state(basis).amplitudes
    np.testing.assert_allclose(propagate(H, 0.7, psi), scipy.linalg.expm(-0.7j * H.toarray()) @ psi, atol=1e-12)


def test_decay_norm_decreases_monotonically():
    basis = enumerate_basis(6, 1, (1, 2))
    H = build_hamiltonian(basis, PulseSpec(0, OMEGA, 1.0), BlockadeModel.fixed(50.0), decay=DecayModel(0.3))
    psi = reservoir_state(basis)
    norms = [evolve(psi, H, t).norm2 for t in np.linspace(0, 3, 31)]
    assert all(b <= a + 1e-15 for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1.0


def test_unitary_evolution_preserves_norm():
    basis = enumerate_basis(20, 3, (1, 2), 1)
    H = build_hamiltonian(basis, PulseSpec(0, OMEGA, 1.0), BlockadeModel.fixed(30.0))
    psi = reservoir_state(basis)
    assert evolve(psi, H, 7.3).norm2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sign", [1, -1])
def test_blockade_limit_scales_as_inverse_square(sign):
    K = 9
    basis = enumerate_basis(K, 1, (1, 2))
    psi = reservoir_state(basis)
    t_pi = math.pi / (math.sqrt(K) * OMEGA)
    pops = []
    ratios = [100.0, 1000.0]
    for ratio in ratios:
        H = build_hamiltonian(basis, PulseSpec(0, OMEGA, t_pi), BlockadeModel.fixed(ratio * OMEGA, sign))
        out = evolve(psi, H, t_pi)
        pops.append(abs(out.amplitudes[basis.position((0,), 2)]) ** 2)
    slope = math.log(pops[1] / pops[0]) / math.log(ratios[1] / ratios[0])
    assert slope == pytest.approx(-2.0, abs=0.1)


def test_blockade_sign_gives_conjugate_dynamics():
    # H(-U) = -G H(U) G with G = (-1)^n_r, so resonant dynamics are conjugated
    basis = enumerate_basis(6, 1, (1, 2))
    psi = reservoir_state(basis)
    outs = []
    for sign in (1, -1):
        H = build_hamiltonian(basis, PulseSpec(0, OMEGA, 1.0), BlockadeModel.fixed(20.0, sign))
        outs.append(evolve(psi, H, 0.37).amplitudes)
    gauge = (-1.0) ** basis.rydberg_occ
    np.testing.assert_allclose(outs[0], gauge * outs[1].conj(), atol=1e-12)


def test_crosstalk_frame_is_undone_for_far_detuned_level():
    basis = enumerate_basis(5, 2, (1, 1))
    psi = encode_register(basis, "01").amplitudes
    pulse = PulseSpec(1, OMEGA, math.pi / OMEGA)
    out = apply_pulse(psi, basis, pulse, BlockadeModel.fixed(1e4), crosstalk=[(2, 1e5)])
    k = basis.position((0, 1))
    # only an AC Stark phase of order Omega^2 t / (4 Delta) remains
    assert abs(out[k] - 1.0) < 1e-4


def test_crosstalk_near_resonant_level_is_driven():
    basis = enumerate_basis(5, 2, (1, 1))
    psi = encode_register(basis, "01").amplitudes
    pulse = PulseSpec(1, OMEGA, math.pi / OMEGA)
    out = apply_pulse(psi, basis, pulse, BlockadeModel.fixed(1e4), crosstalk=[(2, 0.0)])
    # the excited state is shared by both levels: a resonant lambda system with
    # equal couplings g = Omega/2 oscillates at sqrt(2) g
    g = OMEGA / 2
    expected = math.sin(math.sqrt(2) * g * pulse.duration) ** 2 / 2
    assert abs(out[basis.position((0, 0), 1)]) ** 2 == pytest.approx(expected, abs=1e-12)


def test_forster_shift_limits():
    c3 = 10.0
    c3_ang = TWO_PI * 1e3 * c3
    assert forster_shift(c3, 0.0, 2.0) == pytest.approx(2 / math.sqrt(3) * c3_ang / 8)
    assert forster_shift(c3, 100.0, 1e4) < 1e-12
    # large-distance van der Waals tail: (4/3) C3^2 / (delta r^6)
    r, delta = 50.0, 100.0
    assert forster_shift(c3, delta, r) == pytest.approx((4 / 3) * c3_ang**2 / (delta * r**6), rel=1e-4)
    with pytest.raises(NonpositiveDistanceError):
        forster_shift(c3, delta, 0.0)
    with pytest.raises(NonpositiveDistanceError):
        blockade_shift(BlockadeModel.forster(c3, delta, -1.0))


def test_blockade_shift_modes():
    assert blockade_shift(BlockadeModel.fixed(-5.0)) == 5.0
    m = BlockadeModel.forster(3.0, 10.0, 4.0)
    assert blockade_shift(m) == pytest.approx(forster_shift(3.0, 10.0, 4.0))
