"""Physical parameter models for a Cs ensemble register.

Covers the Förster-type pair interaction and its two-point calibration, the
linear Zeeman level scheme that makes ground-to-Rydberg transitions
frequency selective, a cubic Rydberg lifetime law, and Monte-Carlo statistics
of the weakest pair interaction inside a trap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from itertools import combinations

import numpy as np
from scipy.spatial.distance import pdist

from .dynamics import TWO_PI, forster_shift
from .errors import (
    DegeneratePointsError,
    InfeasibleFitError,
    InvalidQuantumNumberError,
    NonpositiveFieldError,
)


@lru_cache(maxsize=1)
def load_defaults() -> dict[str, float]:
    text = resources.files("rydberg_ensemble").joinpath("data/cs_defaults.txt").read_text()
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, value = line.split()
            out[key] = float(value)
    return out


# ---------------------------------------------------------------------------
# Förster interaction


@dataclass(frozen=True)
class ForsterParams:
    """``c3`` in GHz um^3 (ordinary frequency), ``delta`` in rad/us."""

    c3: float
    delta: float
    anisotropy: float = 0.15

    def __post_init__(self):
        if not self.c3 > 0:
            raise ValueError("c3 must be positive")
        if not 0 <= self.anisotropy <= 0.5:
            raise ValueError("anisotropy must lie in [0, 0.5]")

    def shift(self, r):
        """Interaction shift in rad/us at distance(s) ``r`` (um)."""
        return forster_shift(self.c3, self.delta, r)


def forster_curve(params: ForsterParams, r_values) -> list[tuple[float, float]]:
    """``(r, U)`` pairs in the order given; U in rad/us."""
    return [(float(r), float(params.shift(r))) for r in r_values]


def fit_forster_params(points, anisotropy: float = 0.15) -> ForsterParams:
    """Recover ``(C3, delta)`` from ``(r, U)`` samples of the shift curve.

    Squaring ``U + delta/2 = sqrt((delta/2)^2 + 4/3 C3^2 / r^6)`` gives
    ``U delta - 4/3 r^-6 C3^2 = -U^2``, linear in ``(delta, C3^2)``.  Two points
    are solved exactly; more points in the least-squares sense.
    """
    pts = [(float(r), float(u)) for r, u in points]
    if len({r for r, _ in pts}) < 2:
        raise DegeneratePointsError("need at least two points with distinct r")
    if any(r <= 0 or u <= 0 for r, u in pts):
        raise InfeasibleFitError("distances and shifts must be positive")
    scale = (TWO_PI * 1e3) ** 2
    A = np.array([[u, -(4.0 / 3.0) * scale / r**6] for r, u in pts])
    b = np.array([-(u**2) for _, u in pts])
    # column scaling keeps the system well conditioned
    norms = np.linalg.norm(A, axis=0)
    if len(pts) == 2:
        x = np.linalg.solve(A / norms, b) / norms
    else:
        x = np.linalg.lstsq(A / norms, b, rcond=None)[0] / norms
    delta, c3_sq = x
    u_scale = max(u for _, u in pts)
    if abs(delta) <= 1e-9 * u_scale:
        delta = 0.0
    if c3_sq <= 0 or delta < 0:
        raise InfeasibleFitError(f"fit gives delta={delta:.6g} rad/us, C3^2={c3_sq:.6g}")
    return ForsterParams(math.sqrt(c3_sq), float(delta), anisotropy)


def forster_params_for_n(params: ForsterParams, n: int, n_ref: int = 70) -> ForsterParams:
    """Scale an anchor parameter set: ``C3 ~ n^4``, energy defect ``~ n^-3``."""
    ratio = n / n_ref
    return replace(params, c3=params.c3 * ratio**4, delta=params.delta * ratio**-3)


@lru_cache(maxsize=8)
def default_forster_params(n: int = 70) -> ForsterParams:
    d = load_defaults()
    anchors = [
        (d["anchor_1_um"], TWO_PI * d["anchor_1_mhz"]),
        (d["anchor_2_um"], TWO_PI * d["anchor_2_mhz"]),
    ]
    params = fit_forster_params(anchors, anisotropy=d["anisotropy"])
    if n != int(d["anchor_n"]):
        params = forster_params_for_n(params, n, int(d["anchor_n"]))
    return params


# ---------------------------------------------------------------------------
# Rydberg lifetime


def rydberg_lifetime(n: int, tau_ref: float | None = None, n_ref: int | None = None) -> float:
    """Population decay rate ``1/tau`` (1/us) with ``tau = tau_ref (n/n_ref)^3``."""
    d = load_defaults()
    tau_ref = d["lifetime_tau_ref_us"] if tau_ref is None else tau_ref
    n_ref = int(d["lifetime_n_ref"]) if n_ref is None else n_ref
    if n < 10 or n_ref < 10:
        raise InvalidQuantumNumberError(f"principal quantum number must be >= 10, got {n}")
    if tau_ref <= 0:
        raise ValueError("tau_ref must be positive")
    return 1.0 / (tau_ref * (n / n_ref) ** 3)


# ---------------------------------------------------------------------------
# Zeeman level scheme


@dataclass(frozen=True)
class LevelEntry:
    index: int
    f: int
    m: int
    excluded: bool = False


# Rydberg sublevel used by simulator sublevel 0 (|r>) and 1 (|r'>)
SUBLEVEL_MJ = (0.5, -0.5)


@dataclass(frozen=True)
class LevelScheme:
    """Ground Zeeman states mapped to reservoir (index 0) and register levels."""

    entries: tuple[LevelEntry, ...]
    field_gauss: float = 15.0
    rydberg_n: int = 70
    bohr_mhz_per_gauss: float = 1.399625
    hyperfine_mhz: float = 9192.631770

    @property
    def usable(self) -> tuple[LevelEntry, ...]:
        return tuple(sorted((e for e in self.entries if not e.excluded), key=lambda e: e.index))

    @property
    def register_capacity(self) -> int:
        return len(self.usable) - 1

    def level(self, index: int) -> LevelEntry:
        for e in self.usable:
            if e.index == index:
                return e
        raise KeyError(index)

    def with_field(self, field_gauss: float) -> LevelScheme:
        return replace(self, field_gauss=float(field_gauss))

    def without_exclusions(self) -> LevelScheme:
        entries = tuple(replace(e, excluded=False) for e in self.entries)
        return replace(self, entries=entries)

    def transition_mhz(self, entry: LevelEntry, mj: float) -> float:
        """Ground -> ``ns_1/2, m_j`` frequency offset (MHz), linear Zeeman model.

        Ground g-factors are +1/4 (f=4) and -1/4 (f=3); the Rydberg state has
        g_j = 2.  The f=3 manifold sits one hyperfine splitting lower.
        """
        g_f = 0.25 if entry.f == 4 else -0.25
        zeeman = self.bohr_mhz_per_gauss * self.field_gauss * (2.0 * mj - g_f * entry.m)
        return zeeman + (self.hyperfine_mhz if entry.f == 3 else 0.0)


def load_level_scheme(field_gauss: float | None = None, rydberg_n: int = 70, path=None) -> LevelScheme:
    """Read a level-scheme file (``index f m excluded`` per line)."""
    if path is None:
        text = resources.files("rydberg_ensemble").joinpath("data/cs_levels.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    entries = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        idx, f, m, excl = (int(x) for x in line.split())
        entries.append(LevelEntry(idx, f, m, bool(excl)))
    d = load_defaults()
    return LevelScheme(
        tuple(entries),
        field_gauss=d["field_gauss"] if field_gauss is None else float(field_gauss),
        rydberg_n=rydberg_n,
        bohr_mhz_per_gauss=d["bohr_mhz_per_gauss"],
        hyperfine_mhz=d["hyperfine_mhz"],
    )


def _transitions(scheme: LevelScheme, usable_only: bool = True):
    entries = scheme.usable if usable_only else scheme.entries
    return [(e, mj, scheme.transition_mhz(e, mj)) for e in entries for mj in SUBLEVEL_MJ]


def degenerate_transition_check(scheme: LevelScheme, usable_only: bool = True, tol_mhz: float = 1e-9):
    """Pairs of transitions from different ground states with equal frequency.

    Each pair is ``((f, m, m_j), (f', m', m_j'))``.  A zero field is accepted
    and simply reports the resulting degeneracies.
    """
    out = []
    for (e1, mj1, nu1), (e2, mj2, nu2) in combinations(_transitions(scheme, usable_only), 2):
        if (e1.f, e1.m) != (e2.f, e2.m) and abs(nu1 - nu2) <= tol_mhz:
            out.append(((e1.f, e1.m, mj1), (e2.f, e2.m, mj2)))
    return out


@dataclass(frozen=True)
class SelectivityReport:
    """``min_separation`` in rad/us; probabilities of exciting an unwanted level."""

    min_separation: float
    peak_probability: float
    mean_probability: float

    @property
    def min_separation_mhz(self) -> float:
        return self.min_separation / TWO_PI


def zeeman_selectivity(scheme: LevelScheme, rabi_frequency: float) -> SelectivityReport:
    """Worst-case off-resonant excitation of a neighbouring transition.

    The separation is the smallest gap between transitions of distinct usable
    ground states.  A detuned two-level drive peaks at
    ``Omega^2 / (Omega^2 + Delta^2)`` and averages to half of that.
    """
    if not scheme.field_gauss > 0:
        raise NonpositiveFieldError("bias field must be positive")
    nus = _transitions(scheme)
    sep = min(
        abs(n1 - n2)
        for (e1, _, n1), (e2, _, n2) in combinations(nus, 2)
        if e1.index != e2.index
    )
    delta = TWO_PI * sep
    peak = rabi_frequency**2 / (rabi_frequency**2 + delta**2)
    return SelectivityReport(delta, peak, 0.5 * peak)


def crosstalk_detunings(scheme: LevelScheme, qubit_count: int):
    """Extra detunings of spectator levels for every (level, sublevel) drive.

    Returns ``{(a, s): ((l, extra), ...)}`` in rad/us where ``extra`` is the
    offset of the ``l -> s`` transition from the laser tuned to ``a -> s``.
    """
    levels = [scheme.level(i) for i in range(qubit_count + 1)]
    table = {}
    for a, ea in enumerate(levels):
        for s, mj in enumerate(SUBLEVEL_MJ):
            nu_a = scheme.transition_mhz(ea, mj)
            table[(a, s)] = tuple(
                (l, TWO_PI * (nu_a - scheme.transition_mhz(el, mj))) for l, el in enumerate(levels) if l != a
            )
    return table


# ---------------------------------------------------------------------------
# blockade statistics

TRAP_SHAPES = ("box", "sphere", "gaussian-cloud")


@dataclass(frozen=True)
class TrapGeometry:
    """Atom cloud whose largest extent (any pair distance) is ``scale`` um.

    ``sphere``: uniform ball of diameter ``scale``; ``box``: uniform cube whose
    body diagonal is ``scale``; ``gaussian-cloud``: isotropic Gaussian with
    ``sigma = scale/4`` truncated to the ball of diameter ``scale``.
    ``positions`` pins the atoms instead of sampling them.
    """

    shape: str = "sphere"
    scale: float = 5.0
    atom_count: int = 2
    positions: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.shape not in TRAP_SHAPES:
            raise ValueError(f"shape must be one of {TRAP_SHAPES}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @classmethod
    def pinned(cls, positions) -> TrapGeometry:
        pos = np.asarray(positions, dtype=float)
        extent = float(pdist(pos).max()) if len(pos) > 1 else 1.0
        return cls("sphere", extent, len(pos), pos)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.positions is not None:
            return np.array(self.positions, dtype=float)
        K, R = self.atom_count, 0.5 * self.scale
        if self.shape == "box":
            side = self.scale / math.sqrt(3.0)
            return rng.uniform(-side / 2, side / 2, size=(K, 3))
        if self.shape == "sphere":
            v = rng.normal(size=(K, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            return v * R * rng.uniform(size=(K, 1)) ** (1 / 3)
        out = np.empty((0, 3))
        while len(out) < K:
            v = rng.normal(scale=self.scale / 4, size=(2 * K, 3))
            out = np.vstack([out, v[np.linalg.norm(v, axis=1) <= R]])
        return out[:K]


@dataclass
class BlockadeStatistics:
    """Per-sample weakest pair shift ``u_min`` (rad/us) and the closest pair distance."""

    u_min: np.ndarray
    min_distance: np.ndarray

    @property
    def median(self) -> float:
        return float(np.median(self.u_min))

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.u_min, q))


def blockade_statistics(geometry: TrapGeometry, params: ForsterParams, samples: int = 200, seed: int = 0) -> BlockadeStatistics:
    """Sample atom configurations and record the weakest pair interaction.

    Each pair's shift is multiplied by an anisotropy factor drawn uniformly
    from ``[1 - a, 1 + a]``.  Every sample uses its own child seed, so results
    do not depend on evaluation order.
    """
    if geometry.atom_count < 2:
        raise ValueError("need at least two atoms")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    a = params.anisotropy
    u_min = np.empty(samples)
    d_min = np.empty(samples)
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(samples)):
        rng = np.random.default_rng(child)
        d = pdist(geometry.sample(rng))
        factor = rng.uniform(1 - a, 1 + a, size=d.shape)
        u_min[k] = np.min(params.shift(d) * factor)
        d_min[k] = d.min()
    return BlockadeStatistics(u_min, d_min)
