"""Exact diagonalization of the full Hamiltonian for small systems.

Serves as the brute-force oracle for the DMRG engine: matrix-free operator
application, iterative lowest-eigenpair search, diagonal observables and the
exact bitstring distribution.  Basis states are integers whose bit k encodes
the occupation of the site with chain index k + 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .kernels import apply_hamiltonian_kernel
from .lattice import InteractionTable, LadderGeometry, ModelParams, build_interaction_table

MAX_ED_SITES = 20


class ResourceError(RuntimeError):
    """System too large for the exact oracle."""


class NumericalError(RuntimeError):
    """Eigensolver failed to converge."""


@dataclass
class SpectrumResult:
    energies: np.ndarray  # nondecreasing, units of omega
    states: np.ndarray  # (dim, k) unit-norm columns
    residuals: np.ndarray


def hamiltonian_diagonal(
    geometry: LadderGeometry, params: ModelParams, table: InteractionTable | None = None
) -> np.ndarray:
    """Diagonal of H in the occupation basis: -delta * n_tot + pairwise V n n'."""
    n = geometry.num_sites
    if n > MAX_ED_SITES:
        raise ResourceError(f"{n} sites exceeds the exact-oracle cap of {MAX_ED_SITES}")
    if table is None:
        table = build_interaction_table(geometry, params)
    dim = 1 << n
    states = np.arange(dim, dtype=np.uint64)
    occ = ((states[:, None] >> np.arange(n, dtype=np.uint64)) & 1).astype(np.float64)
    diag = -params.delta_over_omega * occ.sum(axis=1)
    for a, b, v in table.pairs:
        diag += v * occ[:, a - 1] * occ[:, b - 1]
    return diag


def apply_hamiltonian(
    geometry: LadderGeometry,
    params: ModelParams,
    vector: np.ndarray,
    diag: np.ndarray | None = None,
) -> np.ndarray:
    """Matrix-free H @ vector with the truncated long-range interaction table."""
    n = geometry.num_sites
    if diag is None:
        diag = hamiltonian_diagonal(geometry, params)
    if vector.shape != (1 << n,):
        raise ValueError("vector length must be 2**num_sites")
    vec = np.ascontiguousarray(vector, dtype=np.float64)
    out = np.empty_like(vec)
    apply_hamiltonian_kernel(diag, vec, out, 0.5, n)
    return out


def dense_hamiltonian(geometry: LadderGeometry, params: ModelParams) -> np.ndarray:
    """Literal dense H for N <= 12; test oracle for the matrix-free path."""
    n = geometry.num_sites
    if n > 12:
        raise ResourceError("dense construction capped at 12 sites")
    dim = 1 << n
    h = np.diag(hamiltonian_diagonal(geometry, params))
    for s in range(dim):
        for k in range(n):
            h[s ^ (1 << k), s] += 0.5
    return h


def ed_ground_state(
    geometry: LadderGeometry,
    params: ModelParams,
    k_states: int = 1,
    table: InteractionTable | None = None,
    maxiter: int | None = None,
) -> SpectrumResult:
    """Lowest k eigenpairs by Lanczos on the matrix-free operator."""
    if k_states < 1:
        raise ValueError("k_states must be >= 1")
    n = geometry.num_sites
    diag = hamiltonian_diagonal(geometry, params, table)
    dim = diag.size

    def matvec(v):
        out = np.empty(dim)
        apply_hamiltonian_kernel(diag, np.ascontiguousarray(v, dtype=np.float64), out, 0.5, n)
        return out

    if dim <= 64:
        h = np.diag(diag)
        for s in range(dim):
            for k in range(n):
                h[s ^ (1 << k), s] += 0.5
        w, v = np.linalg.eigh(h)
        energies, states = w[:k_states], v[:, :k_states]
    else:
        op = LinearOperator((dim, dim), matvec=matvec, dtype=np.float64)
        try:
            energies, states = eigsh(op, k=k_states, which="SA", maxiter=maxiter, tol=0)
        except Exception as exc:  # ArpackNoConvergence and friends
            raise NumericalError(f"iterative eigensolver failed: {exc}") from exc
        order = np.argsort(energies)
        energies, states = energies[order], states[:, order]
    residuals = np.array(
        [np.linalg.norm(matvec(states[:, i]) - energies[i] * states[:, i]) for i in range(k_states)]
    )
    if np.any(residuals > 1e-9):
        raise NumericalError(f"eigen-residuals too large: {residuals}")
    return SpectrumResult(energies=energies, states=states, residuals=residuals)


def ed_observable(state_vector: np.ndarray, diagonal_values: np.ndarray) -> float:
    """Expectation of a diagonal observable: sum_s |psi_s|^2 O(s)."""
    if state_vector.shape != diagonal_values.shape:
        raise ValueError("state and observable dimensions differ")
    return float(np.sum(np.abs(state_vector) ** 2 * diagonal_values))


def site_occupation_diagonal(num_sites: int, site_chain_index: int) -> np.ndarray:
    """Diagonal of n_k for the site with the given 1-based chain index."""
    states = np.arange(1 << num_sites, dtype=np.uint64)
    return ((states >> np.uint64(site_chain_index - 1)) & 1).astype(np.float64)


def ed_bitstring_distribution(state_vector: np.ndarray) -> np.ndarray:
    """Probabilities |psi_s|^2 over all basis states."""
    probs = np.abs(state_vector) ** 2
    total = probs.sum()
    if not np.isclose(total, 1.0, atol=1e-12):
        raise ValueError("state vector is not normalized")
    return probs / total
