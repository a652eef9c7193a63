"""Small shared helpers: array validation, float formatting, equality.

Numerical policy
----------------
All public APIs accept any sequence of reals where a vector is expected and
normalize it to a float64 ``numpy`` array.  Arrays stored on value objects
are copies with the writeable flag cleared, so instances can be shared
freely without defensive copying at every call site.

Floats written to files go through :func:`format_float`, which emits 17
significant digits — enough for ``float(format_float(x))`` to reproduce
``x`` bit-exactly — while keeping integral values short (``"2"`` rather
than ``"2.0000000000000000"``).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Any

import numpy as np

from .errors import InvalidGeometryError


def as_vec3(value: Any, name: str = "vector") -> np.ndarray:
    """Coerce ``value`` to a read-only float64 array of shape (3,)."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise InvalidGeometryError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidGeometryError(f"{name} must be finite, got {arr.tolist()}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def as_array(value: Any, name: str, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Coerce to a read-only float64 array, optionally checking shape.

    ``-1`` entries in ``shape`` match any extent along that axis.
    """
    arr = np.asarray(value, dtype=np.float64)
    if shape is not None:
        if arr.ndim != len(shape) or any(
            want not in (-1, got) for want, got in zip(shape, arr.shape)
        ):
            raise InvalidGeometryError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidGeometryError(f"{name} must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def format_float(x: float) -> str:
    """Render a float with 17 significant digits (round-trip exact)."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite values cannot be serialized")
    return "%.17g" % x


def dataclass_eq(a: Any, b: Any) -> bool:
    """Field-by-field equality that treats ndarray fields by value.

    Intended as the ``__eq__`` of frozen dataclasses holding arrays, where
    the generated comparison would raise on ambiguous array truth values.
    """
    if b.__class__ is not a.__class__:
        return NotImplemented  # type: ignore[return-value]
    for f in dataclasses.fields(a):
        va, vb = getattr(a, f.name), getattr(b, f.name)
        if isinstance(va, np.ndarray) or isinstance(vb, np.ndarray):
            if not (
                isinstance(va, np.ndarray)
                and isinstance(vb, np.ndarray)
                and va.shape == vb.shape
                and np.array_equal(va, vb)
            ):
                return False
        elif isinstance(va, tuple) and va and isinstance(va[0], np.ndarray):
            if len(va) != len(vb) or not all(
                np.array_equal(x, y) for x, y in zip(va, vb)
            ):
                return False
        elif va != vb:
            return False
    return True


def check_identifier(value: str, name: str = "id") -> str:
    """Validate a user-supplied identifier (also used in filenames/URLs)."""
    if not isinstance(value, str) or not value:
        raise InvalidGeometryError(f"{name} must be a non-empty string")
    ok = all(ch.isalnum() or ch in "_-#." for ch in value)
    if not ok or value in (".", ".."):
        raise InvalidGeometryError(
            f"{name} may only contain letters, digits, '_', '-', '#', '.': got {value!r}"
        )
    return value


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average along axis 0 with shrinking edge windows.

    The window is symmetric; near the boundaries it shrinks so the first
    and last samples are averaged over progressively fewer neighbours and
    the endpoints themselves are kept exactly.  ``window`` must be odd.
    """
    if window <= 1:
        return values.copy()
    if window % 2 == 0:
        raise ValueError("smoothing window must be odd")
    half = window // 2
    n = values.shape[0]
    out = np.empty_like(values)
    for i in range(n):
        k = min(half, i, n - 1 - i)
        out[i] = values[i - k : i + k + 1].mean(axis=0)
    return out
