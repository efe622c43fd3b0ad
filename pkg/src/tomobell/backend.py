"""Selects the compiled hot-loop implementation, or the numpy fallback.

Set ``TOMOBELL_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_IMPLS = {"python": _fallback}
if _core is not None:
    _IMPLS["compiled"] = _core

if os.environ.get("TOMOBELL_PURE", "") not in ("", "0") or _core is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"


def available_backends() -> list[str]:
    return sorted(_IMPLS)


def get_backend(name: str | None = None):
    """Module providing ``accumulate_chunk`` and ``kernel_table``."""
    name = BACKEND if name is None else name
    try:
        return _IMPLS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}") from None
