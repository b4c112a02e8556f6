"""Selects the service-path simulation backend at import time.

The compiled kernel is optional: builds without a C compiler fall back to
the NumPy implementation with identical numerical results (the parity test
asserts bit equality whenever both are importable).
"""

from __future__ import annotations

from . import _simpy
from .errors import ConfigError

try:
    from . import _simkernel
    HAVE_KERNEL = True
except ImportError:  # pragma: no cover - depends on the build environment
    _simkernel = None
    HAVE_KERNEL = False

BACKEND_NAME = "kernel" if HAVE_KERNEL else "python"


def get_backend(name: str | None = None):
    """Return (module, name) for the requested backend.

    None or "auto" prefers the compiled kernel when present; "python" and
    "kernel" force one side (forcing a missing kernel is a ConfigError).
    """
    if name in (None, "auto"):
        return (_simkernel, "kernel") if HAVE_KERNEL else (_simpy, "python")
    if name == "python":
        return _simpy, "python"
    if name == "kernel":
        if not HAVE_KERNEL:
            raise ConfigError("compiled simulation kernel is not available")
        return _simkernel, "kernel"
    raise ConfigError(f"unknown backend {name!r} (use 'auto', 'python' or 'kernel')")
