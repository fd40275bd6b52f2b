# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the matrix-free Hamiltonian application in the occupation basis."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def apply_hamiltonian_kernel(
    cnp.float64_t[::1] diag,
    cnp.float64_t[::1] vec,
    cnp.float64_t[::1] out,
    double half_omega,
    int num_sites,
):
    """out = diag * vec + half_omega * sum_k flip_k(vec), flipping one occupation bit."""
    cdef Py_ssize_t dim = vec.shape[0]
    cdef Py_ssize_t s
    cdef int k
    cdef double acc
    for s in range(dim):
        acc = diag[s] * vec[s]
        for k in range(num_sites):
            acc += half_omega * vec[s ^ (1 << k)]
        out[s] = acc
    return None
