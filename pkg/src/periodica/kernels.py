"""Backend selection for the hot loops.

The compiled extension is used when it imports cleanly, unless the
environment variable ``PERIODICA_PURE`` is set to a non-empty value.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("PERIODICA_PURE"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

advance = _impl.advance
edge_quadrature = _impl.edge_quadrature


def backends():
    """Available implementations, keyed by name."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["compiled"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return out
