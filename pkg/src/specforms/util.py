"""Small numeric helpers used across modules."""

import json

import numpy as np

from .errors import ValidationError

# Trace-valued quantities must be real up to this relative slack.
TRACE_IMAG_TOL = 1e-10


def as_complex_matrix(a):
    """Coerce input to a square complex ndarray."""
    m = np.asarray(getattr(a, "matrix", a), dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    return m


def real_trace(a):
    """Trace of `a` asserted real: |imag| <= 1e-10 * (1 + |real|)."""
    t = np.trace(as_complex_matrix(a))
    if abs(t.imag) > TRACE_IMAG_TOL * (1.0 + abs(t.real)):
        raise ValidationError(
            f"trace has a non-negligible imaginary part: {t!r}"
        )
    return float(t.real)


def frobenius(a):
    return float(np.linalg.norm(np.asarray(a)))


def operator_norm(a):
    """Largest singular value."""
    m = np.atleast_2d(np.asarray(a))
    return float(np.linalg.norm(m, ord=2))


def fit_loglog_slope(x, y):
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValidationError("slope fit needs at least two points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValidationError("slope fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


VOLATILE_REPORT_KEYS = ("wall_clock_s", "timestamp")


def _strip_volatile(obj):
    if isinstance(obj, dict):
        return {
            k: _strip_volatile(v)
            for k, v in obj.items()
            if k not in VOLATILE_REPORT_KEYS
        }
    if isinstance(obj, (list, tuple)):
        return [_strip_volatile(v) for v in obj]
    return obj


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def canonical_json(obj, drop_volatile=False):
    """Deterministic JSON text: sorted keys, shortest round-trip floats.

    With drop_volatile the run-to-run keys (wall clock, timestamps) are
    removed at every nesting level, which is how reports are compared.
    """
    if drop_volatile:
        obj = _strip_volatile(obj)
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default)
