"""Backend selection for the accelerated kernels.

The simplex pivot loop exists twice: a numba-compiled version and a plain
numpy version with identical pivoting rules.  Setting the environment
variable MORPHBOX_NO_NUMBA to a non-empty value (anything but "0") forces the
numpy path; otherwise numba is used when it imports cleanly.  The choice is
made once per process, at first use.
"""

import os

_NUMBA_OK = None


def numba_available() -> bool:
    """True when the numba JIT can actually be imported."""
    global _NUMBA_OK
    if _NUMBA_OK is None:
        try:
            import numba  # noqa: F401

            _NUMBA_OK = True
        except ImportError:
            _NUMBA_OK = False
    return _NUMBA_OK


def default_backend() -> str:
    """Resolve the backend name: "numba" or "numpy"."""
    flag = os.environ.get("MORPHBOX_NO_NUMBA", "").strip()
    if flag and flag != "0":
        return "numpy"
    return "numba" if numba_available() else "numpy"


def resolve_backend(name=None) -> str:
    """Validate an explicit backend request, or pick the default."""
    if name is None:
        return default_backend()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not numba_available():
        raise RuntimeError("numba backend requested but numba is not importable")
    return name
