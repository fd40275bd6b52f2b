"""Pure-numpy kernels, used when the compiled extension is unavailable."""

import numpy as np


def apply_hamiltonian_kernel(diag, vec, out, half_omega, num_sites):
    """out = diag * vec + half_omega * sum_k flip_k(vec)."""
    np.multiply(diag, vec, out=out)
    for k in range(num_sites):
        # flipping bit k permutes the basis; realize it as an axis reversal
        shaped = vec.reshape(-1, 2, 1 << k)
        out.reshape(-1, 2, 1 << k)[:, ::-1, :] += half_omega * shaped
    return None
