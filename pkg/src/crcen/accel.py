"""Switch between the numba kernels and the pure-numpy path.

The JIT path is used when numba imports and ``CRCEN_DISABLE_JIT`` is unset
(or set to ``0``/``false``). :func:`enable_jit` / :func:`disable_jit`
override the environment for the current process.
"""

import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

ENV_FLAG = "CRCEN_DISABLE_JIT"

_override: bool | None = None


def jit_enabled() -> bool:
    if not HAVE_NUMBA:
        return False
    if _override is not None:
        return _override
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("", "0", "false", "no")


def enable_jit() -> None:
    global _override
    _override = True


def disable_jit() -> None:
    global _override
    _override = False


def reset_jit() -> None:
    """Drop any in-process override and defer to the environment again."""
    global _override
    _override = None
