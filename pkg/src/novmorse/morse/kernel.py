"""Backend selection for the flow kernel.

The compiled extension is used when it imports; otherwise the pure-Python
twin.  ``NOVMORSE_KERNEL=python`` forces the fallback.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _flow_py

try:
    from . import _flowkernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _flow_py.integrate}
if _compiled is not None:
    BACKENDS["cython"] = _compiled.integrate

_active = "cython" if _compiled is not None and os.environ.get("NOVMORSE_KERNEL") != "python" else "python"


def backend() -> str:
    return _active


def available() -> tuple[str, ...]:
    return tuple(BACKENDS)


def set_backend(name: str) -> None:
    global _active
    if name not in BACKENDS:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}")
    _active = name


@contextmanager
def using(name: str):
    prev = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def integrate(*args):
    return BACKENDS[_active](*args)
