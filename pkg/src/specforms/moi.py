"""Multiple operator integrals on Hermitian matrices.

For decompositions H_0, ..., H_m, perturbations V_1, ..., V_m, and a
scalar symbol phi of m+1 variables, the operator integral is the
eigenprojection series

    T_phi(V_1, .., V_m)
        = sum over index tuples of phi(lam^0_{i_0}, ..., lam^m_{i_m})
          P^0_{i_0} V_1 P^1_{i_1} ... V_m P^m_{i_m}.

In the eigenbases this is a tensor contraction of the symbol values
against the rotated perturbations, evaluated here with einsum. Symbols
may be divided-difference descriptors, momentum specs, separable sums,
or bare callables; values at repeated eigenvalue tuples are memoized
(up to ordering for symmetric symbols).
"""

from dataclasses import dataclass

import numpy as np

from .divided import DividedDifference
from .errors import UnsupportedConfigError, ValidationError
from .functions import as_kernel
from .momenta import MomentumSpec, momentum_eval, momentum_perturbation_pair
from .spectral import SpectralDecomposition, eigendecompose
from .util import as_complex_matrix, frobenius

MAX_ORDER = 3


def _as_decomposition(obj):
    if isinstance(obj, SpectralDecomposition):
        return obj
    return eigendecompose(obj)


@dataclass(frozen=True)
class SeparableSymbol:
    """phi(x_0..x_m) = sum_t w_t * a_{t,0}(x_0) * ... * a_{t,m}(x_m)."""

    terms: tuple  # of (weight, (model_or_callable, ...))

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("separable symbol needs at least one term")
        sizes = {len(fns) for _, fns in self.terms}
        if len(sizes) != 1:
            raise ValidationError("all separable terms must share one arity")
        terms = tuple(
            (float(w), tuple(as_kernel(f) for f in fns)) for w, fns in self.terms
        )
        object.__setattr__(self, "terms", terms)

    @property
    def order(self):
        return len(self.terms[0][1]) - 1

    def __call__(self, values):
        values = np.asarray(values, dtype=float)
        total = 0.0
        for w, fns in self.terms:
            prod = w
            for fn, x in zip(fns, values):
                prod *= float(fn.eval(x))
            total += prod
        return total


@dataclass(frozen=True)
class MoiRequest:
    """Decompositions, perturbations, and the symbol tying them together."""

    decompositions: tuple
    perturbations: tuple
    symbol: object
    tol: float = 1e-9

    def __post_init__(self):
        decs = tuple(_as_decomposition(d) for d in self.decompositions)
        perts = tuple(as_complex_matrix(v) for v in self.perturbations)
        if len(decs) != len(perts) + 1:
            raise ValidationError(
                f"{len(perts)} perturbations need {len(perts) + 1} decompositions, "
                f"got {len(decs)}"
            )
        m = len(perts)
        if not 1 <= m <= MAX_ORDER:
            raise ValidationError(f"operator integral order {m} outside 1..{MAX_ORDER}")
        dims = {d.dim for d in decs} | {v.shape[0] for v in perts}
        if len(dims) != 1:
            raise ValidationError(f"all matrices must share one dimension, got {dims}")
        object.__setattr__(self, "decompositions", decs)
        object.__setattr__(self, "perturbations", perts)
        object.__setattr__(self, "tol", float(self.tol))

    @property
    def order(self):
        return len(self.perturbations)

    @property
    def dim(self):
        return self.decompositions[0].dim


def _symbol_adapter(symbol, tol):
    """Return (eval(values) -> float, is_symmetric)."""
    if isinstance(symbol, DividedDifference):
        return (lambda vals: symbol(vals, quad_tol=tol)), True
    if isinstance(symbol, MomentumSpec):
        return (lambda vals: momentum_eval(symbol, vals, tol=tol)), symbol.is_symmetric
    if isinstance(symbol, SeparableSymbol):
        return symbol, False
    if callable(symbol):
        return (lambda vals: float(symbol(*vals))), False
    raise ValidationError(f"cannot interpret {symbol!r} as an integral symbol")


def _phi_tensor(symbol, eig_sets, tol):
    evaluate, symmetric = _symbol_adapter(symbol, tol)
    shape = tuple(e.size for e in eig_sets)
    phi = np.empty(shape, dtype=float)
    memo = {}
    for idx in np.ndindex(shape):
        vals = tuple(float(eig_sets[j][idx[j]]) for j in range(len(idx)))
        key = tuple(sorted(vals)) if symmetric else vals
        got = memo.get(key)
        if got is None:
            got = float(evaluate(np.asarray(vals)))
            if not np.isfinite(got):
                raise ValidationError(
                    f"symbol evaluated to {got} at eigenvalue tuple {vals}"
                )
            memo[key] = got
        phi[idx] = got
    return phi


def _contract(phi, rotated):
    m = len(rotated)
    if m == 1:
        return phi * rotated[0]
    if m == 2:
        return np.einsum("abc,ab,bc->ac", phi, rotated[0], rotated[1])
    return np.einsum(
        "abcd,ab,bc,cd->ad", phi, rotated[0], rotated[1], rotated[2]
    )


def _assemble(request, eig_sets):
    decs = request.decompositions
    rotated = [
        decs[j].eigenvectors.conj().T @ request.perturbations[j] @ decs[j + 1].eigenvectors
        for j in range(request.order)
    ]
    phi = _phi_tensor(request.symbol, eig_sets, request.tol)
    core = _contract(phi, rotated)
    u0 = decs[0].eigenvectors
    um = decs[-1].eigenvectors
    return u0 @ core @ um.conj().T


def moi_exact(request):
    """Dense evaluation of the operator integral."""
    eig_sets = [d.eigenvalues for d in request.decompositions]
    return _assemble(request, eig_sets)


def binned_eigenvalues(eigenvalues, n):
    """Snap each eigenvalue to the left edge of its bin [l/n, (l+1)/n)."""
    n = int(n)
    if n < 1:
        raise ValidationError("bin count must be >= 1")
    return np.floor(np.asarray(eigenvalues, dtype=float) * n) / n


def moi_binned(request, n):
    """Operator integral with the symbol read on the 1/n eigenvalue grid."""
    eig_sets = [binned_eigenvalues(d.eigenvalues, n) for d in request.decompositions]
    return _assemble(request, eig_sets)


def moi_separable(symbol, decompositions, perturbations):
    """Exact product evaluation of a separable symbol.

    sum_t w_t a_0(H_0) V_1 a_1(H_1) ... V_m a_m(H_m), each factor applied
    spectrally. Cross-validates the tensor path without any quadrature.
    """
    if not isinstance(symbol, SeparableSymbol):
        raise ValidationError("moi_separable needs a SeparableSymbol")
    decs = [_as_decomposition(d) for d in decompositions]
    perts = [as_complex_matrix(v) for v in perturbations]
    if len(decs) != symbol.order + 1 or len(perts) != symbol.order:
        raise ValidationError(
            f"separable symbol of order {symbol.order} needs "
            f"{symbol.order + 1} decompositions and {symbol.order} perturbations"
        )
    total = None
    for w, fns in symbol.terms:
        factor = _spectral_apply(fns[0], decs[0])
        for fn, v, d in zip(fns[1:], perts, decs[1:]):
            factor = factor @ v @ _spectral_apply(fn, d)
        total = w * factor if total is None else total + w * factor
    return total


def _spectral_apply(model, decomposition):
    u = decomposition.eigenvectors
    return (u * model.eval(decomposition.eigenvalues)) @ u.conj().T


def _matrix_power_spectral(decomposition, s):
    u = decomposition.eigenvectors
    return (u * decomposition.eigenvalues ** int(s)) @ u.conj().T


def algebraic_shift(request, powers):
    """Both sides of the monomial-shift identity.

    For psi = x_0^{s_0} ... x_m^{s_m} * phi, the integral T_psi equals
    T_phi with H_0^{s_0} multiplied onto the left of V_1 and H_j^{s_j}
    onto the right of V_j. Returns (lhs, rhs) evaluated independently.
    """
    powers = tuple(int(s) for s in powers)
    if len(powers) != request.order + 1:
        raise ValidationError(
            f"need {request.order + 1} exponents, got {len(powers)}"
        )
    if any(s < 0 for s in powers):
        raise ValidationError("monomial exponents must be >= 0")

    base_eval, _ = _symbol_adapter(request.symbol, request.tol)

    def shifted(*vals):
        prod = 1.0
        for x, s in zip(vals, powers):
            prod *= x ** s
        return prod * base_eval(np.asarray(vals))

    lhs = moi_exact(
        MoiRequest(
            decompositions=request.decompositions,
            perturbations=request.perturbations,
            symbol=shifted,
            tol=request.tol,
        )
    )

    decs = request.decompositions
    new_perts = []
    for j, v in enumerate(request.perturbations):
        w = v @ _matrix_power_spectral(decs[j + 1], powers[j + 1])
        if j == 0:
            w = _matrix_power_spectral(decs[0], powers[0]) @ w
        new_perts.append(w)
    rhs = moi_exact(
        MoiRequest(
            decompositions=decs,
            perturbations=tuple(new_perts),
            symbol=request.symbol,
            tol=request.tol,
        )
    )
    return lhs, rhs


def perturbation_identity(phi_spec, a, b, tail, perturbations, tol=1e-9):
    """Residual of the first-variable perturbation formula.

    With phi of order m evaluated on (A, H_1..H_m) and on (B, H_1..H_m),
    the difference equals the companion momentum psi of order m+1 on
    (A, B, H_1..H_m) applied to (A - B, V_1..V_m). Returns the Frobenius
    norm of lhs - rhs; psi is built by momentum_perturbation_pair.
    """
    if not isinstance(phi_spec, MomentumSpec):
        raise ValidationError("perturbation identity needs a MomentumSpec symbol")
    da = _as_decomposition(a)
    db = _as_decomposition(b)
    tail = tuple(_as_decomposition(h) for h in tail)
    perts = tuple(as_complex_matrix(v) for v in perturbations)
    if len(tail) != phi_spec.m or len(perts) != phi_spec.m:
        raise ValidationError(
            f"momentum of order {phi_spec.m} needs {phi_spec.m} trailing "
            f"decompositions and perturbations"
        )
    if phi_spec.m + 1 > MAX_ORDER:
        raise UnsupportedConfigError(
            f"companion integral order {phi_spec.m + 1} exceeds the "
            f"supported {MAX_ORDER}"
        )

    t_a = moi_exact(MoiRequest((da,) + tail, perts, phi_spec, tol))
    t_b = moi_exact(MoiRequest((db,) + tail, perts, phi_spec, tol))
    psi = momentum_perturbation_pair(phi_spec)
    gap = da.source.matrix - db.source.matrix
    t_psi = moi_exact(MoiRequest((da, db) + tail, (gap,) + perts, psi, tol))
    return frobenius(t_a - t_b - t_psi)
