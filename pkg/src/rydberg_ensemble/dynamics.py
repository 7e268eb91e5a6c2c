"""Pulse Hamiltonians on the symmetric basis and their time evolution.

Units: angular frequencies and rates in rad/us, times in us, distances in um.
Pulses are square and written directly in the laser rotating frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import IntegratorError, NonpositiveDistanceError, UnknownLevelError
from .fock import EnsembleState, FockBasis, FockState

TWO_PI = 2.0 * math.pi


def mhz(f: float) -> float:
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * f


def to_mhz(w: float) -> float:
    return w / TWO_PI


@dataclass(frozen=True)
class PulseSpec:
    """One square laser pulse coupling ``source_level`` to a Rydberg sublevel.

    ``source_level`` 0 is the reservoir.  ``rydberg_level`` 0 is ``|r>``, 1 the
    second sublevel ``|r'>``.  ``fixed_occupancy``, when set on a
    reservoir pulse, replaces the branch-dependent reservoir count in the
    collective coupling by that constant (idealised homogeneous coupling).
    """

    source_level: int
    rabi_frequency: float
    duration: float
    detuning: float = 0.0
    phase: float = 0.0
    fixed_occupancy: int | None = None
    rydberg_level: int = 0

    def __post_init__(self):
        if self.rabi_frequency < 0:
            raise ValueError("rabi_frequency must be >= 0")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")


@dataclass(frozen=True)
class BlockadeModel:
    """Interaction shift of doubly excited states.

    ``mode='fixed'`` uses ``shift`` (rad/us) directly.  ``mode='forster'``
    evaluates the Förster form from ``c3`` (GHz um^3, ordinary frequency),
    ``delta`` (energy defect, rad/us) and ``pair_distance`` (um).  ``sign``
    selects the branch of the interaction applied in the Hamiltonian.
    """

    mode: str = "fixed"
    shift: float = 0.0
    c3: float | None = None
    delta: float | None = None
    pair_distance: float | None = None
    sign: int = 1

    @classmethod
    def fixed(cls, shift: float, sign: int = 1) -> BlockadeModel:
        return cls("fixed", shift=float(shift), sign=sign)

    @classmethod
    def forster(cls, c3: float, delta: float, pair_distance: float, sign: int = 1) -> BlockadeModel:
        return cls("forster", c3=float(c3), delta=float(delta), pair_distance=float(pair_distance), sign=sign)


@dataclass(frozen=True)
class DecayModel:
    rydberg_linewidth: float = 0.0

    def __post_init__(self):
        if self.rydberg_linewidth < 0:
            raise ValueError("rydberg_linewidth must be >= 0")


def forster_shift(c3: float, delta: float, r) -> np.ndarray | float:
    """Interaction shift ``|sqrt((delta/2)^2 + 4/3 C3^2 / r^6) - delta/2|``.

    ``c3`` in GHz um^3 (ordinary frequency), ``delta`` in rad/us, result in rad/us.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise NonpositiveDistanceError("pair distance must be positive")
    c3_ang = TWO_PI * 1e3 * c3
    half = 0.5 * delta
    coupling2 = (4.0 / 3.0) * c3_ang**2 / r**6
    # (sqrt(h^2 + x) - h) rewritten as x / (sqrt(h^2 + x) + h) to avoid cancellation at large r
    if half >= 0:
        u = coupling2 / (np.sqrt(half**2 + coupling2) + half)
    else:
        u = np.sqrt(half**2 + coupling2) - half
    u = np.abs(u)
    return float(u) if u.ndim == 0 else u


def blockade_shift(blockade: BlockadeModel) -> float:
    """Magnitude of the blockade shift U in rad/us."""
    if blockade.mode == "fixed":
        return abs(float(blockade.shift))
    if blockade.mode == "forster":
        if blockade.pair_distance is None or blockade.pair_distance <= 0:
            raise NonpositiveDistanceError("forster blockade needs a positive pair_distance")
        return forster_shift(blockade.c3, blockade.delta, blockade.pair_distance)
    raise ValueError(f"unknown blockade mode {blockade.mode!r}")


@lru_cache(maxsize=256)
def _transition_structure(basis: FockBasis, level: int, sublevel: int = 0):
    """Index pairs (lower, upper) for moving one atom from ``level`` to Rydberg ``sublevel``."""
    if level < 0 or level > basis.qubit_count:
        raise UnknownLevelError(f"level {level} is not in 0..{basis.qubit_count}")
    if sublevel not in (0, 1) or (sublevel == 1 and basis.aux_rydberg_cap == 0):
        raise UnknownLevelError(f"Rydberg sublevel {sublevel} is not part of the basis")
    lower, upper = [], []
    for k, s in enumerate(basis.states):
        if level == 0:
            if basis.reservoir_occ[k] < 1:
                continue
            reg = s.register
        else:
            if s.register[level - 1] < 1:
                continue
            reg = list(s.register)
            reg[level - 1] -= 1
            reg = tuple(reg)
        if sublevel == 0:
            target = FockState(reg, s.rydberg + 1, s.aux_rydberg)
        else:
            target = FockState(reg, s.rydberg, s.aux_rydberg + 1)
        j = basis.index.get(target)
        if j is not None:
            lower.append(k)
            upper.append(j)
    lower = np.array(lower, dtype=np.int64)
    upper = np.array(upper, dtype=np.int64)
    return lower, upper


def _coupling(basis: FockBasis, level: int, sublevel: int, rabi: float, phase: float, fixed_occupancy=None):
    lower, upper = _transition_structure(basis, level, sublevel)
    occ = basis.occupation(level)[lower].astype(float)
    if level == 0 and fixed_occupancy is not None:
        occ = np.full_like(occ, float(fixed_occupancy))
    factor = np.sqrt(occ * (basis.rydberg_sublevel(sublevel)[lower] + 1))
    values = 0.5 * rabi * np.exp(1j * phase) * factor
    return lower, upper, values


def build_hamiltonian(
    basis: FockBasis,
    pulse: PulseSpec,
    blockade: BlockadeModel,
    crosstalk=None,
    decay: DecayModel | None = None,
) -> sp.csr_matrix:
    """Sparse rotating-frame Hamiltonian of one pulse.

    Couplings carry ``Omega/2 e^{i phi} sqrt(n_a (n_s + 1))`` for one atom
    moving from level ``a`` to Rydberg sublevel ``s``.  The diagonal holds
    ``-Delta n_s`` and the blockade shift ``U n(n-1)/2`` on the total Rydberg
    number ``n``.  ``crosstalk`` is an optional sequence of
    ``(level, extra_detuning)``: each listed level is driven by the same field
    to the same sublevel but sits ``extra_detuning`` away from resonance.
    With ``decay`` the matrix gains ``-i Gamma/2 n`` and is no longer Hermitian.
    """
    dim = basis.dim
    rows, cols, vals = [], [], []

    drives = [(pulse.source_level, 0.0)]
    for level, extra in crosstalk or ():
        if level != pulse.source_level:
            drives.append((int(level), float(extra)))

    sub = pulse.rydberg_level
    diag = -pulse.detuning * basis.rydberg_sublevel(sub).astype(complex)
    u = blockade.sign * blockade_shift(blockade)
    nr = basis.total_rydberg
    diag = diag + u * nr * (nr - 1) / 2.0
    if decay is not None and decay.rydberg_linewidth > 0:
        diag = diag - 0.5j * decay.rydberg_linewidth * nr

    for level, extra in drives:
        fixed = pulse.fixed_occupancy if level == pulse.source_level else None
        lo, up, v = _coupling(basis, level, sub, pulse.rabi_frequency, pulse.phase, fixed)
        rows += [up, lo]
        cols += [lo, up]
        vals += [v, np.conj(v)]
        if extra:
            diag = diag + extra * basis.occupation(level)

    rows.append(np.arange(dim))
    cols.append(np.arange(dim))
    vals.append(diag)
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return H.tocsr()


def _blocks(H: sp.csr_matrix):
    """Group the connected components of H's coupling graph by size.

    Yields ``(members, blocks)`` with ``members`` of shape (nb, s) holding basis
    indices and ``blocks`` the dense (nb, s, s) sub-matrices.
    """
    coo = H.tocoo()
    pattern = sp.coo_matrix((np.ones(coo.nnz), (coo.row, coo.col)), shape=coo.shape)
    n_comp, labels = connected_components(pattern, directed=False)
    sizes = np.bincount(labels, minlength=n_comp)
    order = np.argsort(labels, kind="stable")
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    local = np.empty(H.shape[0], dtype=np.int64)
    local[order] = np.arange(H.shape[0]) - np.repeat(starts, sizes)
    row_size = sizes[labels[coo.row]]
    for size in np.unique(sizes):
        comps = np.flatnonzero(sizes == size)
        group_id = np.full(n_comp, -1, dtype=np.int64)
        group_id[comps] = np.arange(len(comps))
        members = order[starts[comps][:, None] + np.arange(size)]
        blocks = np.zeros((len(comps), size, size), dtype=complex)
        sel = row_size == size
        r, c = coo.row[sel], coo.col[sel]
        np.add.at(blocks, (group_id[labels[r]], local[r], local[c]), coo.data[sel])
        yield members, blocks


def _nonhermitian_propagators(blocks: np.ndarray, t: float) -> np.ndarray:
    """Batched ``exp(-i t B)`` via eigendecomposition; near-defective blocks use Pade."""
    w, V = np.linalg.eig(blocks)
    cond = np.linalg.cond(V)
    good = np.isfinite(cond) & (cond < 1e6)
    prop = np.empty_like(blocks)
    if np.any(good):
        Vg = V[good]
        prop[good] = (Vg * np.exp(-1j * t * w[good])[:, None, :]) @ np.linalg.inv(Vg)
    if not np.all(good):
        prop[~good] = scipy.linalg.expm(-1j * t * blocks[~good])
    return prop


def propagate(H, t: float, amplitudes: np.ndarray) -> np.ndarray:
    """``exp(-i H t) @ amplitudes`` for a vector or a matrix of column states.

    Pulse Hamiltonians conserve every occupation except the driven pair, so
    they split into many small blocks; each block is exponentiated exactly
    (Hermitian or general eigendecomposition, Pade for near-defective blocks).
    """
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if t == 0:
        return amplitudes.copy()
    H = sp.csr_matrix(H)
    skew = (H - H.conj().T).tocoo()
    hermitian = skew.nnz == 0 or not np.any(skew.data)
    out = np.empty_like(amplitudes)
    for members, blocks in _blocks(H):
        if blocks.shape[1] == 1:
            prop = np.exp(-1j * t * blocks)
        elif hermitian:
            w, V = np.linalg.eigh(blocks)
            prop = (V * np.exp(-1j * t * w)[:, None, :]) @ V.conj().transpose(0, 2, 1)
        else:
            prop = _nonhermitian_propagators(blocks, t)
        out[members] = np.einsum("bij,bj...->bi...", prop, amplitudes[members])
    if not np.all(np.isfinite(out)):
        raise IntegratorError("propagation produced non-finite amplitudes")
    return out


def evolve(state: EnsembleState, H, t: float) -> EnsembleState:
    """Return ``exp(-iHt) state`` for a piecewise-constant Hamiltonian."""
    if t < 0:
        raise ValueError("duration must be >= 0")
    if H.shape != (state.basis.dim, state.basis.dim):
        raise ValueError("Hamiltonian does not match the state's basis")
    return EnsembleState(state.basis, propagate(H, t, state.amplitudes))


def apply_pulse(
    amplitudes: np.ndarray,
    basis: FockBasis,
    pulse: PulseSpec,
    blockade: BlockadeModel,
    decay: DecayModel | None = None,
    crosstalk=None,
) -> np.ndarray:
    """Evolve amplitudes (vector or column matrix) through one pulse.

    Crosstalk levels carry their detuning as a diagonal energy in the laser
    frame; that frame rotation is undone at the end of the pulse so register
    phases stay referenced to the idle frame.
    """
    H = build_hamiltonian(basis, pulse, blockade, crosstalk, decay)
    out = propagate(H, pulse.duration, amplitudes)
    if crosstalk:
        frame = np.zeros(basis.dim)
        for level, extra in crosstalk:
            if level != pulse.source_level and extra:
                frame += extra * basis.occupation(level)
        if np.any(frame):
            phase = np.exp(1j * frame * pulse.duration)
            out = phase[:, None] * out if out.ndim == 2 else phase * out
    return out
