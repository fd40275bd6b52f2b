"""Kernel backend selection: compiled extension if built, numpy fallback otherwise.

Set RYDLADDER_KERNELS=python to force the fallback (used by the benchmark).
"""

import os

BACKEND = "python"

if os.environ.get("RYDLADDER_KERNELS", "").lower() != "python":
    try:
        from ._edcore import apply_hamiltonian_kernel

        BACKEND = "cython"
    except ImportError:
        from .fallback import apply_hamiltonian_kernel
else:
    from .fallback import apply_hamiltonian_kernel

__all__ = ["apply_hamiltonian_kernel", "BACKEND"]
