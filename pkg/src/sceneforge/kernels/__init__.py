"""Backend dispatch for the hot rasterization kernels.

Every kernel exists in two byte-compatible implementations:
`numba_impl` (njit loops) and `numpy_impl` (vectorized). Selection follows
sceneforge.backend.BACKEND; both backends must produce identical outputs,
which tests/test_kernels.py enforces.
"""

from sceneforge.backend import BACKEND

if BACKEND == "numba":
    from sceneforge.kernels import numba_impl as _impl
else:
    from sceneforge.kernels import numpy_impl as _impl

points_zbuffer = _impl.points_zbuffer
splat_forward = _impl.splat_forward
splat_backward = _impl.splat_backward

__all__ = ["points_zbuffer", "splat_forward", "splat_backward", "BACKEND"]
