"""Ladder geometry, boundary conditions, and truncated van der Waals couplings.

All energies are expressed in units of the Rabi frequency, so the physics is
controlled by the two dimensionless parameters delta/omega and rb/a.  The
physical-unit entry point :class:`RydbergParams` converts once at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class Boundary(str, Enum):
    SBC = "sbc"
    OBC = "obc"
    PBC = "pbc"


class ConfigurationError(ValueError):
    """Invalid geometry / boundary-condition combination."""


@dataclass(frozen=True)
class RydbergParams:
    """Physical Hamiltonian parameters (angular frequencies and lengths)."""

    omega: float
    delta: float
    c6: float
    lattice_constant: float

    def __post_init__(self):
        if self.omega <= 0 or self.c6 <= 0 or self.lattice_constant <= 0:
            raise ConfigurationError("omega, c6 and lattice constant must be positive")

    @property
    def blockade_radius(self) -> float:
        return (self.c6 / self.omega) ** (1.0 / 6.0)

    def dimensionless(self) -> "ModelParams":
        return ModelParams(
            delta_over_omega=self.delta / self.omega,
            rb_over_a=self.blockade_radius / self.lattice_constant,
        )


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model parameters: detuning and blockade radius in units of omega and a."""

    delta_over_omega: float
    rb_over_a: float

    def __post_init__(self):
        if self.rb_over_a <= 0:
            raise ConfigurationError("rb_over_a must be positive")

    def interaction(self, distance_over_a: float) -> float:
        """Van der Waals coupling V/omega at the given distance (units of a)."""
        if distance_over_a <= 0:
            raise ValueError("distance must be positive")
        return (self.rb_over_a / distance_over_a) ** 6


@dataclass(frozen=True)
class Site:
    """One trap site: rung coordinate, leg index and planar position in units of a."""

    rung: int
    leg: int
    x: float
    y: float
    chain_index: int  # 1-based position in the DMRG chain ordering


@dataclass(frozen=True)
class LadderGeometry:
    num_rungs: int
    legs: int
    boundary: Boundary
    sites: tuple[Site, ...] = field(repr=False)

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    def site(self, chain_index: int) -> Site:
        """Site by its 1-based chain index."""
        s = self.sites[chain_index - 1]
        assert s.chain_index == chain_index
        return s

    def pair_distance(self, i: int, j: int) -> float:
        """Euclidean distance (units of a) between chain indices i and j.

        Under PBC the x-separation is the minimal image; y never wraps.
        """
        if i == j:
            raise ValueError("distance requires two distinct sites")
        si, sj = self.site(i), self.site(j)
        dx = abs(si.x - sj.x)
        if self.boundary is Boundary.PBC:
            dx = min(dx, self.num_rungs - dx)
        dy = si.y - sj.y
        return math.hypot(dx, dy)


def build_geometry(num_rungs: int, legs: int, boundary: Boundary | str, lattice_constant: float = 1.0) -> LadderGeometry:
    """Construct the site list and chain ordering for a ladder or single chain.

    SBC appends one extra site at (0, 0) and one at ((L+1)a, 2a); the bulk
    bottom-row sites carry even chain indices and the top row odd ones.
    Coordinates are stored in units of the lattice constant.
    """
    boundary = Boundary(boundary)
    if num_rungs < 2:
        raise ConfigurationError("need at least two rungs")
    if legs not in (1, 2):
        raise ConfigurationError("legs must be 1 or 2")
    if legs == 1 and boundary is not Boundary.OBC:
        raise ConfigurationError("single-chain mode supports OBC only")

    sites: list[Site] = []
    if legs == 1:
        for i in range(1, num_rungs + 1):
            sites.append(Site(rung=i, leg=0, x=float(i), y=0.0, chain_index=i))
    elif boundary is Boundary.SBC:
        L = num_rungs
        sites.append(Site(rung=0, leg=0, x=0.0, y=0.0, chain_index=1))
        for i in range(1, L + 1):
            sites.append(Site(rung=i, leg=0, x=float(i), y=0.0, chain_index=2 * i))
            sites.append(Site(rung=i, leg=1, x=float(i), y=2.0, chain_index=2 * i + 1))
        sites.append(Site(rung=L + 1, leg=1, x=float(L + 1), y=2.0, chain_index=2 * L + 2))
        sites.sort(key=lambda s: s.chain_index)
    else:
        for i in range(1, num_rungs + 1):
            sites.append(Site(rung=i, leg=0, x=float(i), y=0.0, chain_index=2 * i - 1))
            sites.append(Site(rung=i, leg=1, x=float(i), y=2.0, chain_index=2 * i))
        sites.sort(key=lambda s: s.chain_index)
    return LadderGeometry(num_rungs=num_rungs, legs=legs, boundary=boundary, sites=tuple(sites))


@dataclass(frozen=True)
class InteractionTable:
    """Deduplicated pair couplings (V in units of omega), truncated by rung range."""

    pairs: tuple[tuple[int, int, float], ...]  # (chain_index_i < chain_index_j, V/omega)
    max_rung_range: int

    def __len__(self) -> int:
        return len(self.pairs)


def build_interaction_table(
    geometry: LadderGeometry, params: ModelParams, max_rung_range: int = 20
) -> InteractionTable:
    """All site pairs with rung separation <= max_rung_range, each once.

    The SBC corner sites carry rung coordinates 0 and L+1 and are truncated by
    the same rule as bulk sites.
    """
    if max_rung_range < 1:
        raise ConfigurationError("max_rung_range must be >= 1")
    pairs = []
    n = geometry.num_sites
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            sa, sb = geometry.site(a), geometry.site(b)
            dr = abs(sa.rung - sb.rung)
            if geometry.boundary is Boundary.PBC:
                dr = min(dr, geometry.num_rungs - dr)
            if dr > max_rung_range:
                continue
            v = params.interaction(geometry.pair_distance(a, b))
            pairs.append((a, b, v))
    return InteractionTable(pairs=tuple(pairs), max_rung_range=max_rung_range)


_SBC_RULES = {2: (2, 0), 3: (3, 0), 4: (4, 1), 6: (6, 2)}


def check_order_compatibility(num_rungs: int, boundary: Boundary | str, p: int) -> bool:
    """Whether L rungs admit a defect-free Z_p density wave under SBC or PBC."""
    boundary = Boundary(boundary)
    if p not in (2, 3, 4, 6):
        raise ValueError(f"unsupported order p={p}")
    if boundary is Boundary.PBC:
        return num_rungs % p == 0
    if boundary is Boundary.SBC:
        mod, rem = _SBC_RULES[p]
        return num_rungs % mod == rem
    raise ValueError("compatibility rules are defined for SBC and PBC")
