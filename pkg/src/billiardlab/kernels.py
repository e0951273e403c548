"""Backend selection for the geometric kernels.

The compiled extension is used when importable; set ``BILLIARDLAB_BACKEND=python``
to force the numpy fallback.  Both expose the same functions.
"""
import os

_choice = os.environ.get("BILLIARDLAB_BACKEND", "auto").lower()

if _choice == "python":
    from ._kernels_py import chord, integrated, invert_integrated, orbit, reflect, series

    BACKEND = "python"
else:
    try:
        from ._ckernels import chord, integrated, invert_integrated, orbit, reflect, series

        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        from ._kernels_py import chord, integrated, invert_integrated, orbit, reflect, series

        BACKEND = "python"

__all__ = ["BACKEND", "chord", "integrated", "invert_integrated", "orbit", "reflect", "series"]
