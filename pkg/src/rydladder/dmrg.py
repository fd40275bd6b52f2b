"""Two-site DMRG ground-state search and penalty-based first-excited-state search.

Convergence follows the dual-threshold protocol: sweeps stop once the energy
drift and the mid-bond entropy drift stay below their thresholds on two
consecutive sweeps, while the bond dimension grows through a schedule until
the truncation error target is met.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from . import mpo as mpo_mod
from .lattice import Boundary, LadderGeometry, check_order_compatibility
from .mps import SV_FLOOR, MatrixProductState, canonicalize, classical_state, product_state
from .mpo import MatrixProductOperator, left_boundary, right_boundary, update_left, update_right


class DmrgError(RuntimeError):
    """Local eigensolver failure, with sweep context."""


@dataclass
class DmrgConfig:
    bond_schedule: tuple[int, ...] = (16, 32, 64, 128, 256)
    sweeps_per_stage: int = 20
    trunc_target: float = 1e-10
    energy_tol: float = 1e-11
    entropy_tol: float = 1e-8
    max_sweeps: int = 200
    solver_tol: float = 1e-12
    solver_maxiter: int = 200
    penalty_weight: float = 10.0  # units of omega; exceeds any gap in the studied regimes

    def __post_init__(self):
        if min(self.energy_tol, self.entropy_tol, self.trunc_target) <= 0:
            raise ValueError("thresholds must be positive")
        if list(self.bond_schedule) != sorted(self.bond_schedule):
            raise ValueError("bond schedule must be nondecreasing")


@dataclass
class DmrgDiagnostics:
    sweep_energies: list[float] = field(default_factory=list)
    sweep_entropies: list[float] = field(default_factory=list)
    sweep_max_trunc: list[float] = field(default_factory=list)
    sweep_bond_dims: list[int] = field(default_factory=list)
    converged: bool = False
    reason: str = ""

    def as_records(self):
        for i, e in enumerate(self.sweep_energies):
            yield {
                "sweep": i + 1,
                "energy": e,
                "mid_bond_entropy": self.sweep_entropies[i],
                "max_truncation_error": self.sweep_max_trunc[i],
                "max_bond_dim": self.sweep_bond_dims[i],
            }

    def stream_jsonl(self, fh) -> None:
        for rec in self.as_records():
            fh.write(json.dumps(rec) + "\n")


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

_P_THRESHOLDS = ((2.05, 2), (2.55, 3), (3.15, 4), (np.inf, 6))


def nearest_order(rb_over_a: float) -> int:
    for cut, p in _P_THRESHOLDS:
        if rb_over_a < cut:
            return p
    raise AssertionError


def classical_pattern_bits(geometry: LadderGeometry, p: int) -> list[int]:
    """Occupation bitstring of the pinned classical Z_p density wave, chain order."""
    shift = p // 2
    bits = []
    for site in geometry.sites:
        if geometry.legs == 1:
            bits.append(1 if site.rung % p == 1 % p else 0)
        elif site.leg == 0:
            target = 1 % p if geometry.boundary is Boundary.OBC else 0
            bits.append(1 if site.rung % p == target else 0)
        else:
            target = (1 + shift) % p if geometry.boundary is Boundary.OBC else shift % p
            bits.append(1 if site.rung % p == target else 0)
    return bits


def initial_state(geometry: LadderGeometry, rb_over_a: float, init_spec="auto") -> MatrixProductState:
    """Seed state: rounded classical pattern when the order fits, else uniform tilt."""
    n = geometry.num_sites
    if isinstance(init_spec, MatrixProductState):
        return init_spec.copy()
    if isinstance(init_spec, (list, tuple, np.ndarray)):
        return _soften(classical_pattern_bits_from(init_spec))
    if init_spec == "uniform" or geometry.legs == 1:
        return _uniform_seed(n)
    if init_spec == "auto":
        p = nearest_order(rb_over_a)
        compatible = geometry.boundary in (Boundary.SBC, Boundary.PBC) and check_order_compatibility(
            geometry.num_rungs, geometry.boundary, p
        )
        if geometry.boundary is Boundary.OBC:
            compatible = True  # weak boundary constraints; any pattern seeds fine
        if compatible:
            return _soften(classical_pattern_bits(geometry, p))
        return _uniform_seed(n)
    raise ValueError(f"unknown init spec {init_spec!r}")


def classical_pattern_bits_from(bits) -> list[int]:
    return [int(b) for b in bits]


def _soften(bits, mix: float = 0.15) -> MatrixProductState:
    # small admixture keeps the local solver out of exact zero-amplitude traps
    vecs = np.empty((len(bits), 2))
    for i, b in enumerate(bits):
        vecs[i] = (mix, 1.0) if b else (1.0, mix)
    return product_state(vecs)


def _uniform_seed(n: int) -> MatrixProductState:
    vecs = np.tile([1.0, 0.4], (n, 1))
    return product_state(vecs)


# ---------------------------------------------------------------------------
# Two-site engine
# ---------------------------------------------------------------------------


def _two_site_matvec(lenv, renv, w1, w2, x, shape):
    dl, _, _, dr = shape
    x = x.reshape(shape)
    t1 = np.tensordot(lenv, x, axes=(2, 0))  # (a, u, s, t, r)
    w2dim = max(b for _, b, _ in w1) + 1
    t2 = np.zeros((w2dim, t1.shape[1], 2, 2, dr))
    for a, b, op in w1:
        t2[b] += np.moveaxis(np.tensordot(op, t1[a], axes=(1, 1)), 0, 1)
    w3dim = max(b for _, b, _ in w2) + 1
    t3 = np.zeros((w3dim, t2.shape[1], 2, 2, dr))
    for b, c, op in w2:
        t3[c] += np.moveaxis(np.tensordot(op, t2[b], axes=(1, 2)), 0, 2)
    out = np.tensordot(t3, renv, axes=([0, 4], [0, 2]))  # (u, s, t, bra_r)
    return out.reshape(-1)


def _solve_local(lenv, renv, w1, w2, theta0, cfg: DmrgConfig, penalty=None):
    shape = theta0.shape
    dim = theta0.size

    if penalty is not None:
        cflat = penalty[0].reshape(-1)
        weight = penalty[1]

    def matvec(x):
        y = _two_site_matvec(lenv, renv, w1, w2, x, shape)
        if penalty is not None:
            y = y + weight * np.dot(cflat, x) * cflat
        return y

    if dim <= 128:
        h = np.empty((dim, dim))
        eye = np.eye(dim)
        for i in range(dim):
            h[:, i] = matvec(eye[:, i])
        w, v = np.linalg.eigh(h)
        return w[0], v[:, 0].reshape(shape)
    op = LinearOperator((dim, dim), matvec=matvec, dtype=np.float64)
    try:
        vals, vecs = eigsh(
            op,
            k=1,
            which="SA",
            v0=theta0.reshape(-1),
            tol=cfg.solver_tol,
            maxiter=cfg.solver_maxiter,
            ncv=min(dim, 16),
        )
    except Exception as exc:
        raise DmrgError(f"local eigensolver failed: {exc}") from exc
    return vals[0], vecs[:, 0].reshape(shape)


def _split_theta(theta, d_max, eps_target, to_right: bool):
    dl, _, _, dr = theta.shape
    u, s, vt = np.linalg.svd(theta.reshape(dl * 2, 2 * dr), full_matrices=False)
    s = np.where(s > SV_FLOOR, s, 0.0)
    total = float(np.sum(s**2))
    tail = np.cumsum((s**2)[::-1])[::-1]
    nonzero = int(np.sum(s > 0))
    keep = nonzero
    for r in range(1, nonzero + 1):
        if r >= nonzero or tail[r] / total <= eps_target:
            keep = r
            break
    keep = max(1, min(keep, d_max))
    err = float(tail[keep] / total) if keep < s.size else 0.0
    u, s, vt = u[:, :keep], s[:keep], vt[:keep, :]
    norm = np.linalg.norm(s)
    s = s / norm
    if to_right:
        left = u.reshape(dl, 2, keep)
        right = (s[:, None] * vt).reshape(keep, 2, dr)
    else:
        left = (u * s).reshape(dl, 2, keep)
        right = vt.reshape(keep, 2, dr)
    entropy = float(-np.sum(np.where(s > 0, s**2 * np.log(np.clip(s**2, 1e-300, None)), 0.0)))
    return left, right, err, entropy


class _OverlapEnvs:
    """Mixed <current|reference> environments for the excited-state penalty."""

    def __init__(self, reference: MatrixProductState, n: int):
        ref = reference.copy()
        canonicalize(ref, 0)
        ref.normalize()
        self.ref = ref
        self.left = [None] * (n + 1)
        self.right = [None] * (n + 1)
        self.left[0] = np.ones((1, 1))
        self.right[n] = np.ones((1, 1))

    def rebuild_right(self, psi: MatrixProductState):
        n = psi.num_sites
        for m in range(n - 1, -1, -1):
            g, a = self.ref.tensors[m], psi.tensors[m]
            self.right[m] = np.einsum("lsr,gsh,rh->lg", a.conj(), g, self.right[m + 1])

    def update_left_at(self, m: int, psi: MatrixProductState):
        g, a = self.ref.tensors[m], psi.tensors[m]
        self.left[m + 1] = np.einsum("lg,lsr,gsh->rh", self.left[m], a.conj(), g)

    def update_right_at(self, m: int, psi: MatrixProductState):
        g, a = self.ref.tensors[m], psi.tensors[m]
        self.right[m] = np.einsum("lsr,gsh,rh->lg", a.conj(), g, self.right[m + 1])

    def block(self, m: int) -> np.ndarray:
        g1, g2 = self.ref.tensors[m], self.ref.tensors[m + 1]
        return np.einsum("lg,gsh,hte,re->lstr", self.left[m], g1, g2, self.right[m + 2])


def _run_sweeps(mpo, psi, cfg, penalty_ref=None):
    """Shared sweep driver; returns (psi, energy, diagnostics)."""
    n = psi.num_sites
    canonicalize(psi, 0)
    psi.normalize()
    lenvs = [None] * (n + 1)
    renvs = [None] * (n + 1)
    lenvs[0] = left_boundary(mpo)
    renvs[n] = right_boundary(mpo)
    for m in range(n - 1, 0, -1):
        renvs[m] = update_right(renvs[m + 1], mpo.entries[m], psi.tensors[m], psi.tensors[m])
    oenv = None
    if penalty_ref is not None:
        oenv = _OverlapEnvs(penalty_ref, n)
        oenv.rebuild_right(psi)

    diag = DmrgDiagnostics()
    mid_bond = n // 2 - 1
    sweeps_done = 0
    consecutive_ok = 0

    for stage_idx, d_max in enumerate(cfg.bond_schedule):
        stage_converged = False
        for _ in range(cfg.sweeps_per_stage):
            if sweeps_done >= cfg.max_sweeps:
                break
            max_err = 0.0
            mid_entropy = 0.0
            energy = None
            # left-to-right
            for m in range(n - 1):
                theta0 = np.tensordot(psi.tensors[m], psi.tensors[m + 1], axes=(2, 0))
                pen = None
                if oenv is not None:
                    pen = (oenv.block(m), cfg.penalty_weight)
                energy, theta = _solve_local(
                    lenvs[m], renvs[m + 2], mpo.entries[m], mpo.entries[m + 1], theta0, cfg, pen
                )
                left, right, err, ent = _split_theta(theta, d_max, cfg.trunc_target, to_right=True)
                psi.tensors[m], psi.tensors[m + 1] = left, right
                psi.center = m + 1
                max_err = max(max_err, err)
                if m == mid_bond:
                    mid_entropy = ent
                lenvs[m + 1] = update_left(lenvs[m], mpo.entries[m], left, left)
                if oenv is not None:
                    oenv.update_left_at(m, psi)
            # right-to-left
            for m in range(n - 2, -1, -1):
                theta0 = np.tensordot(psi.tensors[m], psi.tensors[m + 1], axes=(2, 0))
                pen = None
                if oenv is not None:
                    pen = (oenv.block(m), cfg.penalty_weight)
                energy, theta = _solve_local(
                    lenvs[m], renvs[m + 2], mpo.entries[m], mpo.entries[m + 1], theta0, cfg, pen
                )
                left, right, err, ent = _split_theta(theta, d_max, cfg.trunc_target, to_right=False)
                psi.tensors[m], psi.tensors[m + 1] = left, right
                psi.center = m
                max_err = max(max_err, err)
                if m == mid_bond:
                    mid_entropy = ent
                renvs[m + 1] = update_right(renvs[m + 2], mpo.entries[m + 1], right, right)
                if oenv is not None:
                    oenv.update_right_at(m + 1, psi)

            psi.eps_last = max_err
            sweeps_done += 1
            diag.sweep_energies.append(float(energy))
            diag.sweep_entropies.append(float(mid_entropy))
            diag.sweep_max_trunc.append(float(max_err))
            diag.sweep_bond_dims.append(max(psi.bond_dims))

            if len(diag.sweep_energies) >= 2:
                de = abs(diag.sweep_energies[-1] - diag.sweep_energies[-2])
                ds = abs(diag.sweep_entropies[-1] - diag.sweep_entropies[-2])
                if de < cfg.energy_tol and ds < cfg.entropy_tol:
                    consecutive_ok += 1
                else:
                    consecutive_ok = 0
            if consecutive_ok >= 2:
                stage_converged = True
                break
        if sweeps_done >= cfg.max_sweeps:
            diag.reason = "max sweeps exhausted"
            break
        if stage_converged and diag.sweep_max_trunc[-1] <= cfg.trunc_target:
            diag.converged = True
            diag.reason = f"dual thresholds met at D={d_max}"
            break
        if stage_idx == len(cfg.bond_schedule) - 1:
            if stage_converged:
                diag.reason = "bond schedule exhausted before truncation target"
            else:
                diag.reason = "sweep budget exhausted at final bond dimension"
        consecutive_ok = 0

    energy = diag.sweep_energies[-1]
    return psi, float(energy), diag


def dmrg_ground_state(
    mpo: MatrixProductOperator,
    geometry: LadderGeometry,
    config: DmrgConfig | None = None,
    init_spec="auto",
    rb_over_a: float | None = None,
) -> tuple[MatrixProductState, float, DmrgDiagnostics]:
    cfg = config or DmrgConfig()
    rb = rb_over_a if rb_over_a is not None else 2.0
    psi = initial_state(geometry, rb, init_spec)
    return _run_sweeps(mpo, psi, cfg)


def dmrg_excited_state(
    mpo: MatrixProductOperator,
    ground: MatrixProductState,
    config: DmrgConfig | None = None,
    init_spec: MatrixProductState | None = None,
) -> tuple[MatrixProductState, float, DmrgDiagnostics]:
    """Minimize H + w |0><0| starting away from the supplied ground state."""
    cfg = config or DmrgConfig()
    if init_spec is None:
        rng = np.random.default_rng(7)
        n = ground.num_sites
        from .mps import random_mps

        psi = random_mps(n, 4, rng)
    else:
        psi = init_spec.copy()
    psi, energy, diag = _run_sweeps(mpo, psi, cfg, penalty_ref=ground)
    from .mps import overlap

    g = ground.copy()
    canonicalize(g, 0)
    g.normalize()
    e = psi.copy()
    canonicalize(e, 0)
    e.normalize()
    ov = abs(overlap(g, e))
    if ov > 1e-6:
        diag.reason += f"; warning: residual ground overlap {ov:.2e}"
    return psi, energy, diag


def energy_gap(
    mpo: MatrixProductOperator,
    geometry: LadderGeometry,
    config: DmrgConfig | None = None,
    rb_over_a: float | None = None,
) -> tuple[float, dict]:
    psi0, e0, d0 = dmrg_ground_state(mpo, geometry, config, rb_over_a=rb_over_a)
    psi1, e1, d1 = dmrg_excited_state(mpo, psi0, config)
    gap = e1 - e0
    if gap < -1e-9:
        raise DmrgError(f"negative gap {gap}: excited search converged below ground state")
    return gap, {"e0": e0, "e1": e1, "ground_diag": d0, "excited_diag": d1}
