"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the pure-Python
twin takes over. Set FIELDVISION_PURE_KERNELS=1 to force the fallback, e.g.
for the `fieldvision bench` comparison or to reproduce a no-compiler install.
"""

import os

from . import _pure

if os.environ.get("FIELDVISION_PURE_KERNELS"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl

        BACKEND = "native"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

resize_bilinear_rgb = _impl.resize_bilinear_rgb
hsv_mask_union = _impl.hsv_mask_union
label_components8 = _impl.label_components8
region_stats = _impl.region_stats


def backend_name() -> str:
    return BACKEND


def get_backend(name: str):
    """Return a kernel module by name ("pure" or "native"); used by benchmarks."""
    if name == "pure":
        return _pure
    if name == "native":
        from . import _native

        return _native
    raise ValueError(f"unknown kernel backend {name!r}")
