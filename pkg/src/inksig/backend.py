"""Kernel backend selection.

The hot numeric loops (convolutions, pooling, signature folds, map
painting) exist twice: a numba ``@njit`` implementation and a pure-numpy
one. The environment variable ``INKSIG_NUMBA`` picks the backend at
import time:

    INKSIG_NUMBA=1   force numba (error if numba is missing)
    INKSIG_NUMBA=0   force the pure-numpy fallback
    unset / auto     use numba when importable, else fall back

Both backends implement identical semantics; ``benchmarks/bench_backends.py``
compares their throughput.
"""

import os

_ENV_FLAG = "INKSIG_NUMBA"


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def resolve_backend(flag_value: str | None) -> str:
    """Map an ``INKSIG_NUMBA`` setting to a backend name.

    Returns "numba" or "numpy". Raises RuntimeError when numba is forced
    but not importable, ValueError on an unrecognized setting.
    """
    if flag_value is None or flag_value.strip().lower() in ("", "auto"):
        return "numba" if _numba_available() else "numpy"
    val = flag_value.strip().lower()
    if val in ("1", "true", "on", "yes", "numba"):
        if not _numba_available():
            raise RuntimeError(
                f"{_ENV_FLAG}={flag_value!r} requests numba but numba is not installed"
            )
        return "numba"
    if val in ("0", "false", "off", "no", "numpy"):
        return "numpy"
    raise ValueError(f"unrecognized {_ENV_FLAG} value: {flag_value!r}")


BACKEND = resolve_backend(os.environ.get(_ENV_FLAG))
USE_NUMBA = BACKEND == "numba"
