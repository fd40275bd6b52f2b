"""Matrix-product operator for the long-range Rydberg Hamiltonian.

The truncated interaction sum is encoded exactly by a finite-state automaton
over the chain ordering: a "ready" state, one pass-through state per source
site with an unfinished partner, and a "finished" state.  Site tensors are
stored sparsely as (left state, right state, 2x2 operator) triples; only a
few entries per state are nonzero, which the environment contractions exploit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import InteractionTable, LadderGeometry, ModelParams

IDENT = np.eye(2)
NUM = np.diag([0.0, 1.0])
FLIP = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass
class MatrixProductOperator:
    """Sparse MPO: per-site entry lists plus per-bond state dimensions."""

    entries: list[list[tuple[int, int, np.ndarray]]] = field(repr=False)
    bond_dims: list[int]
    left_index: int  # "ready" state on the first bond
    right_index: int  # "finished" state on the last bond

    @property
    def num_sites(self) -> int:
        return len(self.entries)

    @property
    def operator_bond_dimension(self) -> int:
        return max(self.bond_dims)

    def dense_site(self, m: int) -> np.ndarray:
        """Site tensor as a dense (wl, wr, 2, 2) array (tests, small systems)."""
        w = np.zeros((self.bond_dims[m], self.bond_dims[m + 1], 2, 2))
        for a, b, op in self.entries[m]:
            w[a, b] += op
        return w

    def to_dense_matrix(self) -> np.ndarray:
        """Full 2^N x 2^N matrix, basis bit k = site k (tests only, N <= 12)."""
        n = self.num_sites
        if n > 12:
            raise ValueError("dense materialization capped at 12 sites")
        vec = np.zeros(self.bond_dims[0])
        vec[self.left_index] = 1.0
        acc = vec.reshape(-1, 1, 1)  # (bond, row_config, col_config)
        for m in range(n):
            w = self.dense_site(m)  # (wl, wr, s, s')
            acc = np.einsum("aij,abst->bsitj", acc, w).reshape(
                self.bond_dims[m + 1], acc.shape[1] * 2, acc.shape[2] * 2
            )
        mat = acc[self.right_index]
        # acc config index has site 0 as the most significant bit; flip to bit k = site k
        perm = _bit_reversal_permutation(n)
        return mat[np.ix_(perm, perm)]


def _bit_reversal_permutation(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    out = np.zeros_like(idx)
    for k in range(n):
        out |= ((idx >> k) & 1) << (n - 1 - k)
    return out


def build_mpo(
    table: InteractionTable, params: ModelParams, geometry: LadderGeometry
) -> MatrixProductOperator:
    """Encode sum_k [flip_k / 2 - delta n_k] + sum_pairs V n n' over the chain ordering."""
    n = geometry.num_sites
    coupling: dict[tuple[int, int], float] = {}
    partner_max = [-1] * n
    for a, b, v in table.pairs:
        i, j = a - 1, b - 1  # 0-based chain positions
        coupling[(i, j)] = coupling.get((i, j), 0.0) + v
        partner_max[i] = max(partner_max[i], j)

    # open sources at bond m (between sites m-1 and m): i < m with partner >= m
    open_at = [sorted(i for i in range(m) if partner_max[i] >= m) for m in range(n + 1)]
    # state order per bond: finished, pass-throughs, ready
    index_of = []
    for m in range(n + 1):
        idx = {"F": 0}
        for pos, i in enumerate(open_at[m]):
            idx[i] = 1 + pos
        idx["R"] = 1 + len(open_at[m])
        index_of.append(idx)

    local = FLIP * 0.5 - params.delta_over_omega * NUM
    entries: list[list[tuple[int, int, np.ndarray]]] = []
    for m in range(n):
        prev, nxt = index_of[m], index_of[m + 1]
        site = [
            (prev["F"], nxt["F"], IDENT),
            (prev["R"], nxt["R"], IDENT),
            (prev["R"], nxt["F"], local),
        ]
        if m in nxt:
            site.append((prev["R"], nxt[m], NUM))
        for i in open_at[m]:
            if i in nxt:
                site.append((prev[i], nxt[i], IDENT))
            v = coupling.get((i, m))
            if v is not None:
                site.append((prev[i], nxt["F"], v * NUM))
        entries.append(site)

    bond_dims = [len(index_of[m]) for m in range(n + 1)]
    return MatrixProductOperator(
        entries=entries,
        bond_dims=bond_dims,
        left_index=index_of[0]["R"],
        right_index=index_of[n]["F"],
    )


# ---------------------------------------------------------------------------
# Environment contractions (shared by expectation values and the DMRG engine)
# ---------------------------------------------------------------------------


def left_boundary(mpo: MatrixProductOperator) -> np.ndarray:
    env = np.zeros((mpo.bond_dims[0], 1, 1))
    env[mpo.left_index, 0, 0] = 1.0
    return env


def right_boundary(mpo: MatrixProductOperator) -> np.ndarray:
    env = np.zeros((mpo.bond_dims[-1], 1, 1))
    env[mpo.right_index, 0, 0] = 1.0
    return env


def update_left(env: np.ndarray, site_entries, bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """Absorb one site into a left environment env[a, bra_bond, ket_bond]."""
    wr = max(b for _, b, _ in site_entries) + 1
    out = np.zeros((wr, bra.shape[2], ket.shape[2]))
    for a, b, op in site_entries:
        tmp = np.tensordot(env[a], ket, axes=(1, 0))  # (u, s, rk)
        tmp = np.tensordot(op, tmp, axes=(1, 1))  # (s', u, rk)
        out[b] += np.tensordot(bra.conj(), tmp, axes=([0, 1], [1, 0]))
    return out


def update_right(env: np.ndarray, site_entries, bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """Absorb one site into a right environment env[b, bra_bond, ket_bond]."""
    wl = max(a for a, _, _ in site_entries) + 1
    out = np.zeros((wl, bra.shape[0], ket.shape[0]))
    for a, b, op in site_entries:
        tmp = np.tensordot(ket, env[b], axes=(2, 1))  # (lk, s, u)
        tmp = np.tensordot(op, tmp, axes=(1, 1))  # (s', lk, u)
        out[a] += np.tensordot(bra.conj(), tmp, axes=([1, 2], [0, 2]))
    return out


def mpo_expectation(mpo: MatrixProductOperator, state) -> float:
    """<psi|H|psi> for a (not necessarily normalized) MPS."""
    env = left_boundary(mpo)
    for m, t in enumerate(state.tensors):
        env = update_left(env, mpo.entries[m], t, t)
    norm2 = overlap_norm2(state)
    return float(env[mpo.right_index, 0, 0] / norm2)


def overlap_norm2(state) -> float:
    env = np.ones((1, 1))
    for t in state.tensors:
        tmp = np.tensordot(env, t, axes=(1, 0))
        env = np.tensordot(t.conj(), tmp, axes=([0, 1], [0, 1]))
    return float(env[0, 0])
