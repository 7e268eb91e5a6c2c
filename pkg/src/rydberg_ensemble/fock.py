"""Symmetric Fock basis of a K-atom ensemble with N register levels.

A basis element lists how many atoms sit in each register level
``|1>, ..., |N>``, in the Rydberg level ``|r>`` and, optionally, in a second
Rydberg sublevel ``|r'>`` used as the target level of two-qubit gates.  The
reservoir occupation ``k0 = K - sum(b) - n_r - n_r'`` is always derived, so
atom number is conserved by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import BasisMismatchError, InvalidDimensionsError, LengthMismatchError


class FockState(NamedTuple):
    """Occupation numbers ``(b_1..b_N)``, ``n_r`` and ``n_r'`` of one symmetric state.

    Tuple ordering is lexicographic on ``(b_1, ..., b_N, n_r, n_r')``.
    """

    register: tuple[int, ...]
    rydberg: int
    aux_rydberg: int = 0

    def reservoir(self, atom_count: int) -> int:
        return atom_count - sum(self.register) - self.rydberg - self.aux_rydberg

    def bitstring(self) -> str:
        return "".join(str(b) for b in self.register)


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Immutable, deterministically ordered truncated symmetric basis.

    Use :func:`enumerate_basis` to build one; instances are cached and shared.
    """

    atom_count: int
    qubit_count: int
    register_cap: int
    rydberg_cap: int
    aux_rydberg_cap: int
    states: tuple[FockState, ...]
    index: dict = field(repr=False)
    # occupation tables, shape (dim, N) / (dim,)
    register_occ: np.ndarray = field(repr=False)
    rydberg_occ: np.ndarray = field(repr=False)
    aux_occ: np.ndarray = field(repr=False)
    reservoir_occ: np.ndarray = field(repr=False)
    # basis positions of the 2^N computational states, ordered by register integer
    computational: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def caps(self) -> tuple[int, int]:
        return (self.register_cap, self.rydberg_cap)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def total_rydberg(self) -> np.ndarray:
        return self.rydberg_occ + self.aux_occ

    def position(self, register, rydberg: int = 0, aux_rydberg: int = 0) -> int:
        return self.index[FockState(tuple(int(b) for b in register), int(rydberg), int(aux_rydberg))]

    def rydberg_sublevel(self, sublevel: int) -> np.ndarray:
        return self.rydberg_occ if sublevel == 0 else self.aux_occ

    def occupation(self, level: int) -> np.ndarray:
        """Occupation of ``level`` (0 = reservoir) for every basis state."""
        if level == 0:
            return self.reservoir_occ
        return self.register_occ[:, level - 1]


@lru_cache(maxsize=64)
def enumerate_basis(
    atom_count: int, qubit_count: int, caps: tuple[int, int] = (1, 2), aux_rydberg_cap: int = 0
) -> FockBasis:
    """All occupation tuples within ``caps`` whose reservoir count is non-negative.

    Parameters
    ----------
    atom_count : int
        Total number of atoms K.
    qubit_count : int
        Number of register levels N.
    caps : (int, int)
        ``(register_cap, rydberg_cap)``: maximal occupation of a register
        level and of the Rydberg level.
    aux_rydberg_cap : int
        Maximal occupation of the second Rydberg sublevel; 0 leaves it out.
    """
    register_cap, rydberg_cap = (int(c) for c in caps)
    if atom_count < 1 or qubit_count < 1 or register_cap < 1 or rydberg_cap < 1 or aux_rydberg_cap < 0:
        raise InvalidDimensionsError(
            f"need K >= 1, N >= 1 and caps >= 1, got K={atom_count}, N={qubit_count}, caps={caps}"
        )

    ranges = [range(register_cap + 1)] * qubit_count + [range(rydberg_cap + 1), range(aux_rydberg_cap + 1)]
    states = []
    for occ in itertools.product(*ranges):
        if sum(occ) <= atom_count:
            states.append(FockState(tuple(occ[:-2]), occ[-2], occ[-1]))
    states = tuple(states)
    index = {s: k for k, s in enumerate(states)}

    register_occ = np.array([s.register for s in states], dtype=np.int64).reshape(len(states), qubit_count)
    rydberg_occ = np.array([s.rydberg for s in states], dtype=np.int64)
    aux_occ = np.array([s.aux_rydberg for s in states], dtype=np.int64)
    reservoir_occ = atom_count - register_occ.sum(axis=1) - rydberg_occ - aux_occ

    computational = np.full(2**qubit_count, -1, dtype=np.int64)
    weights = 2 ** np.arange(qubit_count - 1, -1, -1)
    is_comp = (rydberg_occ == 0) & (aux_occ == 0) & np.all(register_occ <= 1, axis=1)
    for k in np.flatnonzero(is_comp):
        computational[int(register_occ[k] @ weights)] = k

    for arr in (register_occ, rydberg_occ, aux_occ, reservoir_occ, computational):
        arr.setflags(write=False)
    return FockBasis(
        atom_count, qubit_count, register_cap, rydberg_cap, aux_rydberg_cap, states, index,
        register_occ, rydberg_occ, aux_occ, reservoir_occ, computational,
    )


@dataclass
class EnsembleState:
    """Complex amplitudes over a :class:`FockBasis`."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise LengthMismatchError(
                f"amplitude vector of shape {self.amplitudes.shape} does not match basis dimension {self.basis.dim}"
            )

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> EnsembleState:
        return EnsembleState(self.basis, self.amplitudes.copy())

    def register_vector(self) -> np.ndarray:
        """Amplitudes of the 2^N computational states (missing ones read as 0)."""
        idx = self.basis.computational
        out = np.zeros(len(idx), dtype=complex)
        ok = idx >= 0
        out[ok] = self.amplitudes[idx[ok]]
        return out


def _check_bits(basis: FockBasis, bits: str) -> None:
    if len(bits) != basis.qubit_count or any(c not in "01" for c in bits):
        raise LengthMismatchError(f"expected a bitstring of length {basis.qubit_count}, got {bits!r}")


def encode_register(basis: FockBasis, bits: str) -> EnsembleState:
    """Fock state with one atom in each level ``i`` where ``bits[i-1] == '1'``."""
    _check_bits(basis, bits)
    register = tuple(int(c) for c in bits)
    if sum(register) > basis.atom_count:
        raise InvalidDimensionsError(f"{bits!r} needs more than K={basis.atom_count} atoms")
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.position(register, 0)] = 1.0
    return EnsembleState(basis, amps)


def state_from_register(basis: FockBasis, vector) -> EnsembleState:
    """Embed a 2^N register vector (b_1 most significant) into the Fock basis."""
    vector = np.asarray(vector, dtype=complex)
    if vector.shape != (2**basis.qubit_count,):
        raise LengthMismatchError(f"register vector must have length {2**basis.qubit_count}")
    idx = basis.computational
    if np.any(idx < 0) and np.any(vector[idx < 0] != 0):
        raise InvalidDimensionsError("register vector populates states that need more than K atoms")
    amps = np.zeros(basis.dim, dtype=complex)
    amps[idx[idx >= 0]] = vector[idx >= 0]
    return EnsembleState(basis, amps)


def register_distribution(state: EnsembleState) -> tuple[dict[str, float], float]:
    """Projective readout of the register.

    Returns ``(probabilities, leakage)``.  Probabilities cover every state with
    no Rydberg excitation and ``b_i in {0, 1}``; leakage is whatever is missing from 1,
    i.e. population elsewhere plus norm lost to decay.
    """
    N = state.basis.qubit_count
    reg = state.register_vector()
    p = np.abs(reg) ** 2
    probs = {}
    for k in np.flatnonzero(state.basis.computational >= 0):
        probs[format(int(k), f"0{N}b")] = float(p[k])
    leakage = max(0.0, 1.0 - float(p.sum()))
    return probs, leakage


def fidelity(a: EnsembleState, b: EnsembleState) -> float:
    """``|<a|b>|^2``."""
    if a.basis is not b.basis and (
        a.basis.atom_count != b.basis.atom_count
        or a.basis.qubit_count != b.basis.qubit_count
        or a.basis.caps != b.basis.caps
        or a.basis.aux_rydberg_cap != b.basis.aux_rydberg_cap
    ):
        raise BasisMismatchError("states live on different bases")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))
