"""Inhomogeneous Hubbard chain: single-particle and many-body matrices.

Conventions fixed here and relied on everywhere else:

* sites are 0-based internally; the staggered pattern follows the 1-based
  formula g_i = (-1)^i, so site index 0 carries g = -1;
* Fock configurations are bitmasks with bit b <-> site b, the spin-up
  string precedes the spin-down string, and fermionic signs are computed
  from that single ordering;
* basis ordering of a sector is lexicographic on (up_mask, down_mask).
"""

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .errors import CapacityError, InputError

DENSE_CAP_DEFAULT = 20_000


def _default_pattern(length):
    # (-1)^i with 1-based i: alternating -1, +1, -1, ...
    return np.array([(-1) ** (i + 1) for i in range(length)], dtype=float)


@dataclass(frozen=True)
class LatticeSpec:
    """Chain geometry and couplings, J = 1 sets the energy scale."""

    L: int
    J: float = 1.0
    U: float = 0.0
    boundary: str = "open"
    pattern: np.ndarray = None

    def __post_init__(self):
        if self.L < 2:
            raise InputError(f"chain needs at least 2 sites, got L={self.L}")
        if self.J <= 0:
            raise InputError(f"hopping must be positive, got J={self.J}")
        if self.U < 0:
            raise InputError(f"interaction must be nonnegative, got U={self.U}")
        if self.boundary not in ("open", "periodic"):
            raise InputError(f"unknown boundary {self.boundary!r}")
        pat = self.pattern
        if pat is None:
            pat = _default_pattern(self.L)
        else:
            pat = np.asarray(pat, dtype=float)
            if pat.shape != (self.L,):
                raise InputError("pattern length must equal L")
        pat.setflags(write=False)
        object.__setattr__(self, "pattern", pat)

    @property
    def bonds(self):
        """Nearest-neighbor bonds as (i, j) pairs; the wrap bond appears
        once, and is dropped for L=2 where it would double the open bond."""
        pairs = [(i, i + 1) for i in range(self.L - 1)]
        if self.boundary == "periodic" and self.L > 2:
            pairs.append((self.L - 1, 0))
        return pairs


@dataclass(frozen=True)
class DriveProtocol:
    """Linear ramp v(t) = v0 + dv*t/tau on [0, tau]; sudden is tau -> 0."""

    v0: float
    dv: float
    tau: float = 0.0
    shape: str = "linear-ramp"

    def __post_init__(self):
        if self.dv <= 0:
            raise InputError(f"quench amplitude must be positive, got dv={self.dv}")
        if self.tau < 0:
            raise InputError(f"ramp duration must be nonnegative, got tau={self.tau}")
        if self.shape not in ("linear-ramp", "sudden"):
            raise InputError(f"unknown protocol shape {self.shape!r}")

    @property
    def weak_drive(self):
        """Linear-response validity flag, recorded not enforced."""
        return self.v0 == 0 or abs(self.dv / self.v0) <= 0.1


def staggered_potential(spec, amplitude):
    """Per-site potential amplitude * g_i."""
    return amplitude * spec.pattern


def build_single_particle_hamiltonian(spec, site_potentials):
    """Tight-binding matrix: -J on nearest-neighbor bonds, potentials on
    the diagonal."""
    v = np.asarray(site_potentials, dtype=float)
    if v.shape != (spec.L,):
        raise InputError(f"site_potentials must have length {spec.L}")
    h = np.diag(v)
    for i, j in spec.bonds:
        h[i, j] = -spec.J
        h[j, i] = -spec.J
    return h


@dataclass(frozen=True)
class FockSector:
    """Fixed-(Nup, Ndown) occupation sector with a deterministic basis."""

    L: int
    nup: int
    ndown: int
    up_states: tuple = field(repr=False, default=None)
    down_states: tuple = field(repr=False, default=None)

    def __post_init__(self):
        if not (0 <= self.nup <= self.L and 0 <= self.ndown <= self.L):
            raise InputError(
                f"invalid sector ({self.nup},{self.ndown}) for L={self.L}"
            )
        object.__setattr__(self, "up_states", _sector_masks(self.L, self.nup))
        object.__setattr__(self, "down_states", _sector_masks(self.L, self.ndown))

    @property
    def dim(self):
        return len(self.up_states) * len(self.down_states)

    def index(self, up_mask, down_mask):
        iu = self.up_states.index(up_mask)
        idn = self.down_states.index(down_mask)
        return iu * len(self.down_states) + idn


def _sector_masks(length, count):
    """All bitmasks of given popcount, ascending (lexicographic on bits)."""
    masks = []
    for occ in combinations(range(length), count):
        m = 0
        for site in occ:
            m |= 1 << site
        masks.append(m)
    return tuple(sorted(masks))


def _hop_sign(mask, i, j):
    """Sign of c^+_i c_j acting within one spin string (i != j)."""
    lo, hi = (i, j) if i < j else (j, i)
    between = mask & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))
    return -1 if bin(between).count("1") % 2 else 1


def _hopping_terms(masks, bonds):
    """Yield (row, col, sign) for sum over bonds of c^+_i c_j + h.c."""
    index = {m: k for k, m in enumerate(masks)}
    for col, m in enumerate(masks):
        for i, j in bonds:
            for a, b in ((i, j), (j, i)):
                # c^+_a c_b
                if (m >> b) & 1 and not (m >> a) & 1:
                    new = (m & ~(1 << b)) | (1 << a)
                    yield index[new], col, _hop_sign(m, a, b)


def build_many_body_hamiltonian(sector, spec, site_potentials, cap=DENSE_CAP_DEFAULT):
    """Dense Hubbard Hamiltonian T + W + sum_i v_i n_i in the sector basis."""
    if sector.L != spec.L:
        raise InputError("sector and spec disagree on chain length")
    v = np.asarray(site_potentials, dtype=float)
    if v.shape != (spec.L,):
        raise InputError(f"site_potentials must have length {spec.L}")
    d = sector.dim
    if d > cap:
        raise CapacityError(f"sector dimension {d} exceeds dense cap {cap}")

    nup_states = sector.up_states
    ndn_states = sector.down_states
    nu, nd = len(nup_states), len(ndn_states)
    ham = np.zeros((d, d))

    # Diagonal: potential + interaction.
    site_occ_up = np.array(
        [[(m >> s) & 1 for s in range(spec.L)] for m in nup_states], dtype=float
    )
    site_occ_dn = np.array(
        [[(m >> s) & 1 for s in range(spec.L)] for m in ndn_states], dtype=float
    )
    pot_up = site_occ_up @ v
    pot_dn = site_occ_dn @ v
    for iu, mu in enumerate(nup_states):
        for idn, md in enumerate(ndn_states):
            k = iu * nd + idn
            double = bin(mu & md).count("1")
            ham[k, k] = pot_up[iu] + pot_dn[idn] + spec.U * double

    # Spin-up hopping: block structure (iu, iu') x identity over down.
    for iu2, iu1, sign in _hopping_terms(nup_states, spec.bonds):
        for idn in range(nd):
            ham[iu2 * nd + idn, iu1 * nd + idn] += -spec.J * sign
    # Spin-down hopping: identity over up x (idn, idn') block. A down hop
    # commutes past the whole up string twice, so no extra sign appears.
    for idn2, idn1, sign in _hopping_terms(ndn_states, spec.bonds):
        for iu in range(nu):
            ham[iu * nd + idn2, iu * nd + idn1] += -spec.J * sign

    return ham


def number_operator_matrix(sector, site):
    """Diagonal matrix of n_i = n_{i,up} + n_{i,down} in the sector basis."""
    if not 0 <= site < sector.L:
        raise InputError(f"site {site} out of range for L={sector.L}")
    nd = len(sector.down_states)
    diag = np.empty(sector.dim)
    for iu, mu in enumerate(sector.up_states):
        occ_up = (mu >> site) & 1
        for idn, md in enumerate(sector.down_states):
            diag[iu * nd + idn] = occ_up + ((md >> site) & 1)
    return np.diag(diag)


def half_filled_sector(length):
    """Sector with N = L and total Sz as close to zero as L allows."""
    return FockSector(length, length // 2, length - length // 2)


def sector_dimension(length, nup, ndown):
    return comb(length, nup) * comb(length, ndown)
