"""Measured quantities: densities, rung-imbalance correlations, structure factors,
connected correlators, density Fourier transforms, Binder cumulants, domain-wall
classification and occurrence histograms.

Rung imbalance m_i is the top-leg density minus the bottom-leg density of bulk
rung i; SBC corner sites are excluded from rung observables.  Single-chain
systems use the mean-subtracted density n_i - nbar instead.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import mps as mps_mod
from .lattice import LadderGeometry
from .mps import MatrixProductState

DEFAULT_K_POINTS = 2048


class DegenerateSignal(ValueError):
    """All-zero correlations or vanishing order parameter: peak undefined."""


# ---------------------------------------------------------------------------
# Densities and correlations
# ---------------------------------------------------------------------------


def density_profile(state, geometry: LadderGeometry | None = None) -> np.ndarray:
    """Per-site <n> in chain order, from an MPS or a dense ED state vector."""
    if isinstance(state, MatrixProductState):
        return mps_mod.site_occupations(state)
    vec = np.asarray(state)
    n = int(round(np.log2(vec.size)))
    probs = np.abs(vec) ** 2
    states = np.arange(vec.size, dtype=np.uint64)
    out = np.empty(n)
    for k in range(n):
        out[k] = probs[((states >> np.uint64(k)) & 1) == 1].sum()
    return out


def occupation_pair_matrix(state) -> np.ndarray:
    """<n_a n_b> over all chain-site pairs (diagonal <n_a>)."""
    if isinstance(state, MatrixProductState):
        return mps_mod.two_point_occupations(state)
    vec = np.asarray(state)
    n = int(round(np.log2(vec.size)))
    probs = np.abs(vec) ** 2
    states = np.arange(vec.size, dtype=np.uint64)
    bits = [(((states >> np.uint64(k)) & 1) == 1) for k in range(n)]
    out = np.empty((n, n))
    for a in range(n):
        pa = np.where(bits[a], probs, 0.0)
        out[a, a] = pa.sum()
        for b in range(a + 1, n):
            v = pa[bits[b]].sum()
            out[a, b] = out[b, a] = v
    return out


@dataclass
class CorrelationMatrix:
    matrix: np.ndarray  # L x L, <m_i m_j> over bulk rungs
    mean: np.ndarray  # <m_i>
    num_rungs: int
    metadata: dict = field(default_factory=dict)


def _rung_site_indices(geometry: LadderGeometry) -> tuple[np.ndarray, np.ndarray]:
    """0-based chain positions of (bottom, top) sites for bulk rungs 1..L."""
    bottom = np.empty(geometry.num_rungs, dtype=int)
    top = np.empty(geometry.num_rungs, dtype=int)
    for site in geometry.sites:
        if 1 <= site.rung <= geometry.num_rungs:
            (bottom if site.leg == 0 else top)[site.rung - 1] = site.chain_index - 1
    return bottom, top


def correlation_matrix(state, geometry: LadderGeometry) -> CorrelationMatrix:
    """<m_i m_j> and <m_i> for a two-leg system."""
    if geometry.legs != 2:
        raise ValueError("rung imbalance requires a two-leg geometry; use chain_correlation_matrix")
    pair = occupation_pair_matrix(state)
    bottom, top = _rung_site_indices(geometry)
    dens = np.diag(pair)
    mean = dens[top] - dens[bottom]
    mat = (
        pair[np.ix_(top, top)]
        - pair[np.ix_(top, bottom)]
        - pair[np.ix_(bottom, top)]
        + pair[np.ix_(bottom, bottom)]
    )
    return CorrelationMatrix(matrix=mat, mean=mean, num_rungs=geometry.num_rungs)


def chain_correlation_matrix(state, geometry: LadderGeometry) -> CorrelationMatrix:
    """Single-chain mode: correlations of n_i - nbar (mean density subtracted)."""
    if geometry.legs != 1:
        raise ValueError("chain mode requires a single-leg geometry")
    pair = occupation_pair_matrix(state)
    dens = np.diag(pair).copy()
    nbar = dens.mean()
    mat = pair - nbar * dens[:, None] - nbar * dens[None, :] + nbar**2
    return CorrelationMatrix(matrix=mat, mean=dens - nbar, num_rungs=geometry.num_rungs)


def sample_correlation_matrix(m_samples: np.ndarray, num_rungs: int) -> CorrelationMatrix:
    """Correlation matrix estimated from per-sample rung imbalances (n_samples, L)."""
    m = np.asarray(m_samples, dtype=np.float64)
    return CorrelationMatrix(matrix=m.T @ m / m.shape[0], mean=m.mean(axis=0), num_rungs=num_rungs)


def mean_correlator(corr: CorrelationMatrix) -> np.ndarray:
    """C(r) = average of <m_i m_i'> over pairs with i - i' = r, r = 0..L-1."""
    L = corr.num_rungs
    out = np.empty(L)
    for r in range(L):
        out[r] = np.mean(np.diagonal(corr.matrix, offset=r))
    return out


# ---------------------------------------------------------------------------
# Fourier analysis
# ---------------------------------------------------------------------------


@dataclass
class SpectrumCurve:
    k: np.ndarray
    values: np.ndarray
    k_peak: float
    peak_height: float
    wavelength: float  # p = 2 pi / k_peak


def default_k_grid(num_points: int = DEFAULT_K_POINTS) -> np.ndarray:
    return np.linspace(0.0, 2 * np.pi, num_points + 2)[1:-1]


def _fourier_quadratic(matrix: np.ndarray, k_grid: np.ndarray) -> np.ndarray:
    idx = np.arange(1, matrix.shape[0] + 1)
    phases = np.exp(1j * np.outer(k_grid, idx))
    return np.real(np.einsum("ki,ij,kj->k", phases, matrix, phases.conj()))


def _refine_peak(k_grid: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    j = int(np.argmax(values))
    if j == 0 or j == len(values) - 1:
        return float(k_grid[j]), float(values[j])
    y0, y1, y2 = values[j - 1], values[j], values[j + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return float(k_grid[j]), float(y1)
    shift = 0.5 * (y0 - y2) / denom
    h = k_grid[1] - k_grid[0]
    return float(k_grid[j] + shift * h), float(y1 - 0.25 * (y0 - y2) * shift)


def structure_factor(corr: CorrelationMatrix, k_grid: np.ndarray | None = None) -> SpectrumCurve:
    """S(k) = (p^2/L^2) sum e^{ik(i-i')} <m_i m_i'>, with p from the unnormalized peak."""
    k_grid = default_k_grid() if k_grid is None else np.asarray(k_grid)
    raw = _fourier_quadratic(corr.matrix, k_grid)
    if np.max(np.abs(raw)) < 1e-14:
        raise DegenerateSignal("all-zero correlations: structure-factor peak undefined")
    k_peak, raw_peak = _refine_peak(k_grid, raw)
    p = 2 * np.pi / k_peak
    norm = p**2 / corr.num_rungs**2
    return SpectrumCurve(
        k=k_grid,
        values=norm * raw,
        k_peak=k_peak,
        peak_height=norm * raw_peak,
        wavelength=p,
    )


def structure_factor_at(corr: CorrelationMatrix, k: float) -> float:
    """S evaluated exactly at one wave vector, normalized with p = 2 pi / k."""
    raw = _fourier_quadratic(corr.matrix, np.array([k]))[0]
    p = 2 * np.pi / k
    return float(p**2 / corr.num_rungs**2 * raw)


def connected_correlator_fourier(
    corr: CorrelationMatrix, k_grid: np.ndarray | None = None
) -> SpectrumCurve:
    """G2(k) = (p/L) sum e^{ik(i-i')} (<m_i m_i'> - <m_i><m_i'>), p from the S(k) peak."""
    k_grid = default_k_grid() if k_grid is None else np.asarray(k_grid)
    sk = structure_factor(corr, k_grid)
    connected = corr.matrix - np.outer(corr.mean, corr.mean)
    raw = _fourier_quadratic(connected, k_grid)
    norm = sk.wavelength / corr.num_rungs
    k_peak, raw_peak = _refine_peak(k_grid, raw)
    return SpectrumCurve(
        k=k_grid,
        values=norm * raw,
        k_peak=k_peak,
        peak_height=norm * raw_peak,
        wavelength=sk.wavelength,
    )


def density_fourier(mean_profile: np.ndarray, k_grid: np.ndarray | None = None) -> SpectrumCurve:
    """|F(k)| = |p/L sum_i e^{iki} <m_i>| with p read off the transform's own peak."""
    profile = np.asarray(mean_profile, dtype=np.float64)
    L = profile.size
    if k_grid is None:
        k_grid = np.linspace(0.0, 2 * np.pi, DEFAULT_K_POINTS, endpoint=False)
    idx = np.arange(1, L + 1)
    amp = np.abs(np.exp(1j * np.outer(k_grid, idx)) @ profile)
    k_peak, peak = _refine_peak(k_grid, amp)
    p = 2 * np.pi / k_peak if k_peak > 1e-12 else 1.0
    return SpectrumCurve(
        k=k_grid, values=p / L * amp, k_peak=k_peak, peak_height=p / L * peak, wavelength=p
    )


# ---------------------------------------------------------------------------
# Sampling-based estimators
# ---------------------------------------------------------------------------


def rung_imbalance_samples(samples: np.ndarray, geometry: LadderGeometry) -> np.ndarray:
    """Per-sample m_i = occ_top - occ_bottom over bulk rungs: (n_samples, L)."""
    bottom, top = _rung_site_indices(geometry)
    s = np.asarray(samples)
    return s[:, top].astype(np.int8) - s[:, bottom].astype(np.int8)


def binder_cumulant(m_samples: np.ndarray, k: float) -> tuple[float, float]:
    """U4 = 1 - <|M_k|^4> / (3 <|M_k|^2>^2) with a jackknife standard error."""
    m = np.asarray(m_samples, dtype=np.float64)
    n, L = m.shape
    if n < 100:
        raise ValueError("binder cumulant needs at least 100 samples")
    phases = np.exp(1j * k * np.arange(1, L + 1))
    mk = m @ phases / L
    m2 = np.abs(mk) ** 2
    m4 = m2**2
    if m2.mean() < 1e-14:
        raise DegenerateSignal("vanishing order parameter: U4 undefined")
    u4 = 1.0 - m4.mean() / (3.0 * m2.mean() ** 2)
    # leave-one-out jackknife
    s2 = m2.sum()
    s4 = m4.sum()
    loo2 = (s2 - m2) / (n - 1)
    loo4 = (s4 - m4) / (n - 1)
    u4_loo = 1.0 - loo4 / (3.0 * loo2**2)
    se = float(np.sqrt((n - 1) / n * np.sum((u4_loo - u4_loo.mean()) ** 2)))
    return float(u4), se


def binder_from_distribution(probs: np.ndarray, geometry: LadderGeometry, k: float) -> float:
    """Exact U4 from a full bitstring distribution (oracle path)."""
    n = geometry.num_sites
    states = np.arange(probs.size, dtype=np.uint64)
    occ = ((states[:, None] >> np.arange(n, dtype=np.uint64)) & 1).astype(np.int8)
    m = rung_imbalance_samples(occ, geometry)
    phases = np.exp(1j * k * np.arange(1, geometry.num_rungs + 1))
    mk = m @ phases / geometry.num_rungs
    m2 = np.abs(mk) ** 2
    e2 = float(np.dot(probs, m2))
    e4 = float(np.dot(probs, m2**2))
    if e2 < 1e-14:
        raise DegenerateSignal("vanishing order parameter: U4 undefined")
    return 1.0 - e4 / (3.0 * e2**2)


# ---------------------------------------------------------------------------
# Domain walls and histograms
# ---------------------------------------------------------------------------


@dataclass
class DomainWallReport:
    type1_positions: list[int]  # wall between rungs i and i+1 recorded as i
    type2_positions: list[int]
    excitations_per_leg: tuple[int, int]  # (bottom, top), bulk rungs only
    sublattice_sequence: list[tuple[int, ...]]  # Z4 residues of excited rungs per domain


def classify_domain_walls(sample: np.ndarray, geometry: LadderGeometry) -> DomainWallReport:
    """Type-1: diagonal double occupation on NN rungs; type-2: two empty NN rungs."""
    if geometry.legs != 2:
        raise ValueError("domain-wall classification requires a two-leg sample")
    bottom, top = _rung_site_indices(geometry)
    s = np.asarray(sample).astype(np.int8)
    occ_b, occ_t = s[bottom], s[top]
    L = geometry.num_rungs
    t1, t2 = [], []
    for i in range(L - 1):
        a = occ_b[i] + occ_t[i]
        b = occ_b[i + 1] + occ_t[i + 1]
        if a == 1 and b == 1 and occ_b[i] != occ_b[i + 1]:
            t1.append(i + 1)
        elif a == 0 and b == 0:
            t2.append(i + 1)
    walls = sorted(t1 + t2)
    bounds = [0] + walls + [L]
    sublattice = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        rungs = [i + 1 for i in range(lo, hi) if occ_b[i] or occ_t[i]]
        sublattice.append(tuple(sorted({r % 4 for r in rungs})))
    return DomainWallReport(
        type1_positions=t1,
        type2_positions=t2,
        excitations_per_leg=(int(occ_b.sum()), int(occ_t.sum())),
        sublattice_sequence=sublattice,
    )


@dataclass
class OccurrenceHistogram:
    counts: dict[str, int]
    total: int
    ranking: list[tuple[str, int]]  # descending count, ties lexicographic

    def top(self, n: int) -> list[tuple[str, int]]:
        return self.ranking[:n]


def histogram(samples: np.ndarray) -> OccurrenceHistogram:
    s = np.asarray(samples)
    if s.size == 0:
        raise ValueError("empty sample list")
    keys = ["".join(map(str, row)) for row in s]
    counts = Counter(keys)
    ranking = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return OccurrenceHistogram(counts=dict(counts), total=len(keys), ranking=ranking)
