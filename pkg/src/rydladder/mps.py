"""Matrix-product states: canonical forms, truncation, contraction, entropy, sampling.

Site tensors have shape (left bond, physical 2, right bond); boundary bonds
have dimension 1.  Physical index 0 is the atomic ground state, index 1 the
Rydberg state.  The chain ordering follows the geometry's linear indexing.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

SV_FLOOR = 1e-14  # singular values below this are dropped unconditionally


@dataclass
class MatrixProductState:
    tensors: list[np.ndarray] = field(repr=False)
    center: int = 0
    eps_last: float = 0.0

    @property
    def num_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[0] for t in self.tensors] + [self.tensors[-1].shape[2]]

    def copy(self) -> "MatrixProductState":
        return MatrixProductState([t.copy() for t in self.tensors], self.center, self.eps_last)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))

    def normalize(self) -> None:
        self.tensors[self.center] /= self.norm()


def product_state(local_vectors: np.ndarray) -> MatrixProductState:
    """Bond-dimension-1 state from per-site kets, shape (N, 2)."""
    tensors = []
    for v in np.asarray(local_vectors, dtype=np.float64):
        v = v / np.linalg.norm(v)
        tensors.append(v.reshape(1, 2, 1))
    return MatrixProductState(tensors, center=0)


def classical_state(bits) -> MatrixProductState:
    """Product state for a classical occupation bitstring."""
    vecs = np.zeros((len(bits), 2))
    for i, b in enumerate(bits):
        vecs[i, int(b)] = 1.0
    return product_state(vecs)


def random_mps(num_sites: int, bond_dim: int, rng: np.random.Generator) -> MatrixProductState:
    tensors = []
    dl = 1
    for i in range(num_sites):
        dr = min(bond_dim, 2 ** (i + 1), 2 ** (num_sites - i - 1))
        tensors.append(rng.standard_normal((dl, 2, dr)))
        dl = dr
    mps = MatrixProductState(tensors, center=0)
    canonicalize(mps, 0)
    mps.normalize()
    return mps


def _shift_right(mps: MatrixProductState) -> None:
    c = mps.center
    a = mps.tensors[c]
    dl, d, dr = a.shape
    q, r = np.linalg.qr(a.reshape(dl * d, dr))
    mps.tensors[c] = q.reshape(dl, d, q.shape[1])
    mps.tensors[c + 1] = np.tensordot(r, mps.tensors[c + 1], axes=(1, 0))
    mps.center = c + 1


def _shift_left(mps: MatrixProductState) -> None:
    c = mps.center
    a = mps.tensors[c]
    dl, d, dr = a.shape
    # QR of the transpose yields the right-isometric factor
    q, r = np.linalg.qr(a.reshape(dl, d * dr).T)
    mps.tensors[c] = q.T.reshape(q.shape[1], d, dr)
    mps.tensors[c - 1] = np.tensordot(mps.tensors[c - 1], r.T, axes=(2, 0))
    mps.center = c - 1


def canonicalize(mps: MatrixProductState, target_center: int) -> MatrixProductState:
    """Move the canonical center, preserving the state exactly (in place)."""
    if not 0 <= target_center < mps.num_sites:
        raise ValueError("target center out of range")
    while mps.center < target_center:
        _shift_right(mps)
    while mps.center > target_center:
        _shift_left(mps)
    return mps


def schmidt_values(mps: MatrixProductState, bond_index: int) -> np.ndarray:
    """Schmidt spectrum across bond b (between sites b and b+1); center must be adjacent."""
    c = mps.center
    if c not in (bond_index, bond_index + 1):
        raise ValueError("canonical center must be adjacent to the bond")
    a = mps.tensors[c]
    dl, d, dr = a.shape
    if c == bond_index:
        mat = a.reshape(dl * d, dr)
    else:
        mat = a.reshape(dl, d * dr)
    s = np.linalg.svd(mat, compute_uv=False)
    return s[s > SV_FLOOR]


def bond_entropy(mps: MatrixProductState, bond_index: int) -> float:
    """Von Neumann entropy -sum lam^2 ln lam^2 over the bond's Schmidt values (nats)."""
    lam = schmidt_values(mps, bond_index)
    lam = lam / np.linalg.norm(lam)
    p = lam**2
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def entropy_profile(mps: MatrixProductState) -> np.ndarray:
    """Entropy at every internal bond; subsystem size l_a = bond index + 1."""
    work = mps.copy()
    canonicalize(work, 0)
    out = np.empty(work.num_sites - 1)
    for b in range(work.num_sites - 1):
        canonicalize(work, b)
        out[b] = bond_entropy(work, b)
    return out


def truncate_bond(
    mps: MatrixProductState, bond_index: int, d_max: int, eps_target: float = 0.0
) -> float:
    """SVD-truncate one bond in place; returns the discarded squared weight.

    Keeps the smallest rank r <= d_max whose discarded relative weight is
    <= eps_target when achievable.  The center ends on the left side of the bond.
    """
    if mps.center not in (bond_index, bond_index + 1):
        raise ValueError("canonical center must be adjacent to the bond")
    canonicalize(mps, bond_index)
    left, right = mps.tensors[bond_index], mps.tensors[bond_index + 1]
    dl, d, dr = left.shape
    u, s, vt = np.linalg.svd(left.reshape(dl * d, dr), full_matrices=False)
    s = np.where(s > SV_FLOOR, s, 0.0)
    total = float(np.sum(s**2))
    if total == 0.0:
        raise ValueError("zero-norm state")
    # smallest rank meeting the discarded-weight target, capped by d_max
    tail = np.cumsum((s**2)[::-1])[::-1]  # tail[r] = discarded weight when keeping r values
    keep = int(np.sum(s > 0))
    for r in range(1, keep + 1):
        if r >= keep or tail[r] / total <= eps_target:
            keep = r
            break
    keep = min(keep, d_max)
    keep = max(keep, 1)
    err = float(tail[keep] / total) if keep < s.size else 0.0
    u, s, vt = u[:, :keep], s[:keep], vt[:keep, :]
    mps.tensors[bond_index] = (u * s).reshape(dl, d, keep)
    mps.tensors[bond_index + 1] = np.tensordot(vt, right, axes=(1, 0))
    mps.center = bond_index
    mps.eps_last = err
    return err


def overlap(a: MatrixProductState, b: MatrixProductState) -> float:
    """<a|b> contracted left to right."""
    env = np.ones((1, 1))
    for ta, tb in zip(a.tensors, b.tensors):
        tmp = np.tensordot(env, tb, axes=(1, 0))  # (ua, s, rb)
        env = np.tensordot(ta.conj(), tmp, axes=([0, 1], [0, 1]))  # (ra, rb)
    return float(env[0, 0])


def to_statevector(mps: MatrixProductState) -> np.ndarray:
    """Dense amplitudes indexed by the basis integer (bit k = site k occupation)."""
    n = mps.num_sites
    if n > 20:
        raise ValueError("dense conversion capped at 20 sites")
    acc = np.ones((1, 1))  # (configurations, bond)
    for t in mps.tensors:
        acc = np.einsum("cl,lsr->scr", acc, t).reshape(-1, t.shape[2])
        # new config index: s * (#old configs) + old, i.e. site bit is the more
        # significant position relative to earlier sites -> bit k = site k
    return np.ascontiguousarray(acc[:, 0])


def expectation_site_diag(mps: MatrixProductState, site: int, diag: np.ndarray) -> float:
    """<O_site> for a diagonal single-site operator, via the canonical center."""
    work = mps.copy()
    canonicalize(work, site)
    work.normalize()
    a = work.tensors[site]
    return float(np.einsum("lsr,s,lsr->", a.conj(), diag, a))


def site_occupations(mps: MatrixProductState) -> np.ndarray:
    """All <n_i> in one sweep."""
    work = mps.copy()
    canonicalize(work, 0)
    work.normalize()
    n = work.num_sites
    out = np.empty(n)
    for i in range(n):
        canonicalize(work, i)
        a = work.tensors[i]
        out[i] = np.einsum("lsr,lsr->", a[:, 1:, :].conj(), a[:, 1:, :])
    return out


def two_point_occupations(mps: MatrixProductState) -> np.ndarray:
    """Matrix of <n_a n_b> for all site pairs (diagonal = <n_a>)."""
    work = mps.copy()
    canonicalize(work, 0)
    work.normalize()
    n = work.num_sites
    out = np.zeros((n, n))
    occ = site_occupations(work)
    np.fill_diagonal(out, occ)
    for a_idx in range(n):
        canonicalize(work, a_idx)
        ta = work.tensors[a_idx]
        env = np.tensordot(ta[:, 1, :].conj(), ta[:, 1, :], axes=(0, 0))  # (ra*, ra)
        for b_idx in range(a_idx + 1, n):
            tb = work.tensors[b_idx]
            val = np.einsum("ud,usr,dsr->", env, tb[:, 1:, :].conj(), tb[:, 1:, :])
            out[a_idx, b_idx] = out[b_idx, a_idx] = float(val)
            env = np.einsum("ud,usr,dst->rt", env, tb.conj(), tb)
    return out


def perfect_sample(mps: MatrixProductState, rng_seed: int, n_samples: int) -> np.ndarray:
    """I.i.d. occupation bitstrings from |psi|^2 by sequential conditional sampling.

    Returns an array of shape (n_samples, N) with entries in {0, 1};
    deterministic for a fixed seed.
    """
    rng = np.random.default_rng(rng_seed)
    work = mps.copy()
    canonicalize(work, 0)
    work.normalize()
    n = work.num_sites
    out = np.empty((n_samples, n), dtype=np.uint8)
    lv = np.ones((n_samples, 1))
    for m, t in enumerate(work.tensors):
        v0 = lv @ t[:, 0, :]
        v1 = lv @ t[:, 1, :]
        w0 = np.einsum("ij,ij->i", v0, v0)
        w1 = np.einsum("ij,ij->i", v1, v1)
        p1 = w1 / (w0 + w1)
        pick = rng.random(n_samples) < p1
        out[:, m] = pick
        lv = np.where(pick[:, None], v1, v0)
        lv /= np.linalg.norm(lv, axis=1, keepdims=True)
    return out


def save_checkpoint(mps: MatrixProductState, path) -> None:
    """Binary container: length-prefixed JSON header followed by raw float64 tensors."""
    header = {
        "num_sites": mps.num_sites,
        "shapes": [list(t.shape) for t in mps.tensors],
        "center": mps.center,
        "eps_last": mps.eps_last,
        "bond_dims": mps.bond_dims,
        "dtype": "float64",
    }
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for t in mps.tensors:
            fh.write(np.ascontiguousarray(t, dtype=np.float64).tobytes())


def load_checkpoint(path) -> MatrixProductState:
    with open(path, "rb") as fh:
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        tensors = []
        for shape in header["shapes"]:
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            tensors.append(np.frombuffer(buf, dtype=np.float64).reshape(shape).copy())
    return MatrixProductState(tensors, center=header["center"], eps_last=header["eps_last"])
