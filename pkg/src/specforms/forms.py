"""Derivative forms of tr f(H) and Taylor expansions of Schatten powers.

The k-th directional derivative of t -> tr f(H + tV) factors through
operator integrals with reduced divided-difference symbols: one trace
against f'(H) at first order, and

    (1/k) tr(V_1 T_{g^[k-1]}(V_2, ..., V_k)),   g = f',

beyond. Symmetrized over arguments these are the polylinear forms whose
diagonal values build the Taylor polynomial of ||H + tV||_p^p; the
leftover remainder carries the p-dependent fractional decay order.
"""

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .divided import DividedDifference
from .errors import UnsupportedConfigError, ValidationError
from .functions import PowerAbs
from .moi import MoiRequest, moi_exact
from .spectral import (
    HermitianMatrix,
    SchattenExponent,
    SpectralDecomposition,
    WORKING_INTERVAL,
    apply_scalar_function,
    eigendecompose,
    schatten_norm,
)
from .util import as_complex_matrix, fit_loglog_slope, operator_norm, real_trace

MAX_FORM_ORDER = 3
REMAINDER_FLOOR = 1e-12
FD_SAFE_GAP = 0.05


def _as_decomposition(obj):
    if isinstance(obj, SpectralDecomposition):
        return obj
    return eigendecompose(obj)


def _check_hermitian(v, what="direction"):
    v = as_complex_matrix(v)
    gap = np.max(np.abs(v - v.conj().T))
    if gap > 1e-12:
        raise ValidationError(f"{what} is not Hermitian (defect {gap:.3e})")
    return v


def model_delta_bracket(decomposition, model, directions, quad_tol=1e-9):
    """Unsymmetrized k-linear derivative form of tr f(H) for a scalar model.

    directions is the list (V_1, ..., V_k); the value is tr(V_1 f'(H))
    for k = 1 and (1/k) tr(V_1 T_{g^[k-1]}(V_2..V_k)) with g = f' beyond.
    This is the model-level route; it accepts any model smooth enough to
    supply the needed derivative kernel.
    """
    decomposition = _as_decomposition(decomposition)
    vs = [as_complex_matrix(v) for v in directions]
    k = len(vs)
    if not 1 <= k <= MAX_FORM_ORDER:
        raise UnsupportedConfigError(f"form order {k} outside 1..{MAX_FORM_ORDER}")
    g = model.derivative_model(1)
    if k == 1:
        return real_trace(vs[0] @ apply_scalar_function(g, decomposition).matrix)
    symbol = DividedDifference(g, k - 1)
    integral = moi_exact(
        MoiRequest(
            decompositions=(decomposition,) * k,
            perturbations=tuple(vs[1:]),
            symbol=symbol,
            tol=quad_tol,
        )
    )
    return real_trace(vs[0] @ integral) / k


def model_delta_symmetric(decomposition, model, directions, quad_tol=1e-9):
    """Symmetrization of model_delta_bracket over all argument orders."""
    vs = [as_complex_matrix(v) for v in directions]
    k = len(vs)
    if k == 1:
        return model_delta_bracket(decomposition, model, vs, quad_tol=quad_tol)
    decomposition = _as_decomposition(decomposition)
    total = 0.0
    for perm in itertools.permutations(range(k)):
        total += model_delta_bracket(
            decomposition, model, [vs[i] for i in perm], quad_tol=quad_tol
        )
    return total / math.factorial(k)


@dataclass(frozen=True)
class FrechetForm:
    """One derivative form of ||H||_p^p: base point, exponent, and order.

    The default scalar model is |x|^p, for which only orders k <= m make
    sense (residual smoothness of |x|^p is p - m). Supplying a smoother
    model (a polynomial, say) lifts that ceiling to the model's own
    derivative count, still capped at order 3.
    """

    base: SpectralDecomposition
    exponent: SchattenExponent
    order: int = 1
    quad_tol: float = 1e-9
    model: object = field(default=None, repr=False)

    def __post_init__(self):
        dec = _as_decomposition(self.base)
        object.__setattr__(self, "base", dec)
        exp = self.exponent
        if not isinstance(exp, SchattenExponent):
            exp = SchattenExponent(exp)
        object.__setattr__(self, "exponent", exp)
        object.__setattr__(self, "order", int(self.order))
        lam = dec.eigenvalues
        lo, hi = WORKING_INTERVAL
        if lam.size and (lam[0] < lo - 1e-12 or lam[-1] > hi + 1e-12):
            raise ValidationError("base spectrum leaves the working interval")
        norm = float(np.sum(np.abs(lam) ** exp.p)) ** (1.0 / exp.p)
        if norm > 1.0 + 1e-9:
            raise ValidationError(
                f"base point must satisfy ||H||_p <= 1, got {norm:.6f}"
            )
        if self.model is None:
            object.__setattr__(self, "model", PowerAbs(exp.p))
            limit = min(exp.m, MAX_FORM_ORDER)
        else:
            limit = min(self.model.max_order, MAX_FORM_ORDER)
        if not 1 <= self.order <= limit:
            raise UnsupportedConfigError(
                f"derivative order {self.order} not available for p={exp.p} "
                f"(orders 1..{limit})"
            )
        object.__setattr__(self, "_limit", limit)

    def directions_ok(self, directions):
        vs = [_check_hermitian(v) for v in directions]
        if len(vs) != self.order:
            raise ValidationError(
                f"form of order {self.order} takes {self.order} directions, "
                f"got {len(vs)}"
            )
        d = self.base.dim
        for v in vs:
            if v.shape != (d, d):
                raise ValidationError(f"direction shape {v.shape} != ({d}, {d})")
        return vs


def delta_bracket(form, directions):
    """delta^[k]: the unsymmetrized derivative form of a FrechetForm."""
    vs = form.directions_ok(directions)
    return model_delta_bracket(form.base, form.model, vs, quad_tol=form.quad_tol)


def delta_symmetric(form, directions):
    """delta^(k): average of delta^[k] over all argument permutations."""
    vs = form.directions_ok(directions)
    return model_delta_symmetric(form.base, form.model, vs, quad_tol=form.quad_tol)


def trace_identity_residual(form, direction, k=None):
    """|tr T_{f^[k]}(V..V) - (1/k) tr(V T_{g^[k-1]}(V..V))| with g = f'.

    The left side integrates the order-k divided difference of f itself;
    the right side is the reduced form. Both are exact traces, so the
    residual is purely quadrature noise.
    """
    if k is None:
        k = form.order
    k = int(k)
    if not 1 <= k <= min(getattr(form, "_limit", MAX_FORM_ORDER), MAX_FORM_ORDER):
        raise UnsupportedConfigError(f"order {k} outside this form's range")
    v = _check_hermitian(direction)
    dec = form.base
    model = form.model
    lhs = real_trace(
        moi_exact(
            MoiRequest(
                decompositions=(dec,) * (k + 1),
                perturbations=(v,) * k,
                symbol=DividedDifference(model, k),
                tol=form.quad_tol,
            )
        )
    )
    g = model.derivative_model(1)
    if k == 1:
        rhs = real_trace(v @ apply_scalar_function(g, dec).matrix)
    else:
        rhs = (
            real_trace(
                v
                @ moi_exact(
                    MoiRequest(
                        decompositions=(dec,) * k,
                        perturbations=(v,) * (k - 1),
                        symbol=DividedDifference(g, k - 1),
                        tol=form.quad_tol,
                    )
                )
            )
            / k
        )
    return abs(lhs - rhs)


# Fourth-order central stencils: offsets, weights, and the scale that
# divides h**k. Width is 2*ceil(k/2) + 2 sample points beside the center.
_STENCILS = {
    1: ((-2, -1, 1, 2), (1.0, -8.0, 8.0, -1.0), 12.0),
    2: ((-2, -1, 0, 1, 2), (-1.0, 16.0, -30.0, 16.0, -1.0), 12.0),
    3: ((-3, -2, -1, 1, 2, 3), (1.0, -8.0, 13.0, -13.0, 8.0, -1.0), 8.0),
}


def fd_oracle(h, v, p, k, step=None):
    """Finite-difference k-th derivative of t -> tr |H + tV|^p at t = 0.

    Uses a fourth-order central stencil at steps h and 2h with
    Richardson extrapolation; returns (value, error_estimate). The
    default step balances truncation against cancellation at order k,
    and the doubled comparison step keeps the fine evaluation out of
    the roundoff-dominated regime.
    """
    k = int(k)
    if k not in _STENCILS:
        raise UnsupportedConfigError(f"finite differences support orders 1..3, not {k}")
    h = as_complex_matrix(h)
    v = as_complex_matrix(v)
    model = PowerAbs(float(p))

    if step is None:
        eps = np.finfo(float).eps
        step = eps ** (1.0 / (k + 2)) * (1.0 + operator_norm(h)) / (1.0 + operator_norm(v))
    step = float(step)

    offsets, weights, scale = _STENCILS[k]
    lo, hi = WORKING_INTERVAL
    for o in (2 * min(offsets), 2 * max(offsets)):
        lam = np.linalg.eigvalsh(h + o * step * v)
        if lam[0] < lo - 1e-12 or lam[-1] > hi + 1e-12:
            raise ValidationError("finite-difference stencil leaves the working interval")

    def g(t):
        lam = np.linalg.eigvalsh(h + t * v)
        return float(np.sum(model.eval(lam)))

    def stencil(dt):
        acc = 0.0
        for o, w in zip(offsets, weights):
            acc += w * g(o * dt)
        return acc / (scale * dt**k)

    fine = stencil(step)
    coarse = stencil(2.0 * step)
    correction = (fine - coarse) / 15.0  # fourth-order Richardson factor
    return fine + correction, abs(correction) + 1e-15 * (1.0 + abs(fine))


@dataclass(frozen=True)
class TaylorReport:
    """Expansion data for one (H, V, p) triple."""

    p: float
    m: int
    deltas: tuple
    t_grid: tuple
    remainder: tuple
    slope: float
    oracle: tuple
    tolerances: dict
    wall_clock_s: float = 0.0

    def to_dict(self):
        return {
            "p": self.p,
            "m": self.m,
            "deltas": list(self.deltas),
            "t": list(self.t_grid),
            "remainder": list(self.remainder),
            "slope": self.slope,
            "oracle": [dict(entry) for entry in self.oracle],
            "tolerances": dict(self.tolerances),
            "wall_clock_s": self.wall_clock_s,
        }

    def to_csv(self):
        lines = ["t,remainder"]
        for t, r in zip(self.t_grid, self.remainder):
            lines.append(f"{t!r},{r!r}")
        return "\n".join(lines) + "\n"


def taylor_expand(h, v, p, t_grid=None, quad_tol=1e-9, with_oracle=True):
    """Taylor data of t -> ||H + tV||_p^p on a grid of small t > 0.

    Computes the diagonal derivative forms delta^(k) for k = 1..m, the
    remainder after subtracting the degree-m polynomial, and the fitted
    log-log slope of |remainder| over grid points above the cancellation
    floor. Slope fitting wants at least four usable points; an all-zero
    remainder (V = 0, or an exactly polynomial power) reports slope NaN.
    The finite-difference oracle entries are skipped when the spectrum
    comes within 0.05 of the kink at zero, where stencils are unreliable.
    """
    started = time.perf_counter()
    exponent = SchattenExponent(p)
    m = min(exponent.m, MAX_FORM_ORDER)
    h = as_complex_matrix(h)
    v = _check_hermitian(v)
    if t_grid is None:
        t_grid = np.logspace(-4, -1, 13)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(t_grid <= 0.0):
        raise ValidationError("t grid values must be positive")
    t_max = float(t_grid.max())
    lo, hi = WORKING_INTERVAL
    lam0 = np.linalg.eigvalsh(h)
    lam1 = np.linalg.eigvalsh(h + t_max * v)
    if min(lam0[0], lam1[0]) < lo - 1e-12 or max(lam0[-1], lam1[-1]) > hi + 1e-12:
        raise ValidationError("H + tV leaves the working interval on the grid")
    model = PowerAbs(exponent.p)
    norm = float(np.sum(model.eval(lam0))) ** (1.0 / exponent.p)
    if norm > 1.0 + 1e-9:
        raise ValidationError(f"base point must satisfy ||H||_p <= 1, got {norm:.6f}")

    decomposition = _as_decomposition(h)
    base = float(np.sum(model.eval(decomposition.eigenvalues)))
    deltas = [
        model_delta_bracket(decomposition, model, [v] * k, quad_tol=quad_tol)
        for k in range(1, m + 1)
    ]

    remainder = []
    for t in t_grid:
        lam = np.linalg.eigvalsh(h + t * v)
        value = float(np.sum(model.eval(lam)))
        poly = sum(d * t**k for k, d in enumerate(deltas, start=1))
        remainder.append(value - base - poly)
    remainder = np.asarray(remainder)

    usable = np.abs(remainder) > REMAINDER_FLOOR
    n_usable = int(np.count_nonzero(usable))
    if n_usable == 0:
        slope = float("nan")
    elif n_usable < 4:
        raise ValidationError(
            f"t grid too coarse: only {n_usable} points with |remainder| above "
            f"{REMAINDER_FLOOR:g}"
        )
    else:
        slope = fit_loglog_slope(t_grid[usable], np.abs(remainder[usable]))

    gap = min(float(np.min(np.abs(lam0))), float(np.min(np.abs(lam1))))
    oracle_skipped = gap < FD_SAFE_GAP
    oracle = []
    if with_oracle and not oracle_skipped:
        for k, d in enumerate(deltas, start=1):
            fd, fd_err = fd_oracle(h, v, exponent.p, k)
            series = math.factorial(k) * d
            oracle.append(
                {
                    "k": k,
                    "series": series,
                    "fd": fd,
                    "fd_error": fd_err,
                    "abs_diff": abs(series - fd),
                }
            )

    return TaylorReport(
        p=exponent.p,
        m=m,
        deltas=tuple(deltas),
        t_grid=tuple(float(t) for t in t_grid),
        remainder=tuple(float(r) for r in remainder),
        slope=slope,
        oracle=tuple(oracle),
        tolerances={
            "quad_tol": quad_tol,
            "remainder_floor": REMAINDER_FLOOR,
            "oracle_skipped_near_zero": bool(oracle_skipped or not with_oracle),
        },
        wall_clock_s=time.perf_counter() - started,
    )


def _gauss01_nodes(order):
    x, w = np.polynomial.legendre.leggauss(int(order))
    return (x + 1.0) / 2.0, w / 2.0


def taylor_integral_form(h0, h1, p, m=None, t_order=None, quad_tol=1e-9):
    """Both sides of the exact integral expansion of tr |H_1|^p.

    lhs = tr f(H_1); rhs accumulates tr f(H_0), the derivative terms
    (1/k) tr(V T_{g^[k-1]}(V..)) for k < m at the segment base point,
    and the integral of t^{m-1} tr(V T^{(H_t, H_0..)}_{g^[m-1]}(V..)) dt
    over t in [0, 1], with H_t = H_0 + tV and g = f'. The first slot of
    the operator integral rides the moving point H_t; the rest stay at
    H_0. The t-integral uses Gauss-Legendre nodes with order doubling
    (8 to 64, stop at 1e-8 agreement) unless t_order pins the order.
    """
    exponent = SchattenExponent(p)
    if m is None:
        m = min(exponent.m, MAX_FORM_ORDER)
    m = int(m)
    if not 1 <= m <= MAX_FORM_ORDER:
        raise UnsupportedConfigError(f"integral form order {m} outside 1..{MAX_FORM_ORDER}")
    if not m < exponent.p:
        raise ValidationError(f"integral form needs m < p, got m={m}, p={exponent.p}")

    h0 = as_complex_matrix(h0)
    h1 = as_complex_matrix(h1)
    v = h1 - h0
    lo, hi = WORKING_INTERVAL
    for end in (h0, h1):
        lam = np.linalg.eigvalsh(end)
        if lam[0] < lo - 1e-12 or lam[-1] > hi + 1e-12:
            raise ValidationError("segment endpoints leave the working interval")

    model = PowerAbs(exponent.p)
    g = model.derivative_model(1)
    d0 = _as_decomposition(h0)
    lhs = float(np.sum(model.eval(np.linalg.eigvalsh(h1))))
    rhs = float(np.sum(model.eval(d0.eigenvalues)))
    for k in range(1, m):
        rhs += model_delta_bracket(d0, model, [v] * k, quad_tol=quad_tol)

    def integrand(t):
        dt = _as_decomposition(HermitianMatrix(h0 + t * v))
        if m == 1:
            return real_trace(v @ apply_scalar_function(g, dt).matrix)
        integral = moi_exact(
            MoiRequest(
                decompositions=(dt,) + (d0,) * (m - 1),
                perturbations=(v,) * (m - 1),
                symbol=DividedDifference(g, m - 1),
                tol=quad_tol,
            )
        )
        return t ** (m - 1) * real_trace(v @ integral)

    def gauss_value(order):
        nodes, weights = _gauss01_nodes(order)
        return float(sum(w * integrand(t) for t, w in zip(nodes, weights)))

    if t_order is not None:
        rhs += gauss_value(int(t_order))
        return lhs, rhs

    value = previous = gauss_value(8)
    for order in (16, 32, 64):
        value = gauss_value(order)
        if abs(value - previous) <= 1e-8 * (1.0 + abs(value)):
            break
        previous = value
    rhs += value
    return lhs, rhs


def selfadjoint_embed(x, p):
    """Hermitian dilation 2^{-1/p} [[0, X], [X*, 0]] preserving ||.||_p."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    p = float(p)
    if p < 1.0:
        raise ValidationError(f"embedding needs p >= 1, got {p}")
    n, r = x.shape
    out = np.zeros((n + r, n + r), dtype=complex)
    out[:n, n:] = x
    out[n:, :n] = x.conj().T
    return HermitianMatrix(out * 2.0 ** (-1.0 / p))


def embedded_delta(h, v, p, k, quad_tol=1e-9):
    """delta^(k) of ||H + tV||_p^p for arbitrary (non-Hermitian) H and V.

    Both arguments ride the Hermitian dilation: the value is
    delta^(k)_{alpha(H)}(alpha(V), ...). Since ||alpha(H + tV)||_p equals
    ||H + tV||_p exactly, the dilated expansion coefficients are the
    expansion coefficients of the original curve, with no extra factor.
    For Hermitian inputs this reproduces the direct form.
    """
    ah = selfadjoint_embed(h, p)
    av = selfadjoint_embed(v, p)
    form = FrechetForm(
        base=eigendecompose(ah),
        exponent=SchattenExponent(p),
        order=int(k),
        quad_tol=quad_tol,
    )
    return delta_symmetric(form, [av.matrix] * int(k))


def holder_difference_norms(phi_model, order, base, direction, tail, perturbations, t_grid, p, quad_tol=1e-9):
    """||T(A_t) - T(B)||_{p'} along A_t = B + tW for a kinked symbol.

    phi_model / order describe the divided-difference symbol g^[order]
    whose first matrix argument moves; p' is the conjugate exponent of
    p. Returns the per-t norms; a zero direction is degenerate and comes
    back as an empty array.
    """
    w = as_complex_matrix(direction)
    if operator_norm(w) < 1e-14:
        return np.zeros(0)
    base = _as_decomposition(base)
    tail = tuple(_as_decomposition(t) for t in tail)
    perts = tuple(as_complex_matrix(u) for u in perturbations)
    p = float(p)
    p_conj = p / (p - 1.0)

    def value(dec):
        if order == 0:
            return apply_scalar_function(phi_model, dec).matrix
        return moi_exact(
            MoiRequest(
                decompositions=(dec,) + tail,
                perturbations=perts,
                symbol=DividedDifference(phi_model, order),
                tol=quad_tol,
            )
        )

    ref = value(base)
    norms = []
    for t in np.asarray(t_grid, dtype=float):
        at = _as_decomposition(HermitianMatrix(base.source.matrix + t * w))
        norms.append(schatten_norm(value(at) - ref, p_conj))
    return np.asarray(norms)
