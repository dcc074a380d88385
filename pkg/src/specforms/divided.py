"""Divided differences with a confluence-safe evaluation strategy.

The k-th divided difference f^[k] is computed from the classical
recursion on sorted nodes when every adjacent gap is comfortably large.
Once nodes cluster (or coincide), the recursion loses digits to
cancellation, so evaluation switches to the integral representation

    f^[k](x_0..x_k) = integral over S_k of f^(k)(sum_j s_j x_j),

which is a constant-weight momentum and handles repeated nodes exactly.
Nodes are sorted on entry, making the result bit-for-bit symmetric under
argument permutations.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedConfigError, ValidationError
from .functions import ScalarFunctionModel, as_kernel
from .momenta import MomentumSpec, momentum_quadrature

# Adjacent-gap threshold, relative to the node spread, below which the
# recursion is abandoned for the integral representation.
CONFLUENCE_FACTOR = 1e-6


def _prepare(model, nodes):
    model = as_kernel(model)
    x = np.sort(np.asarray(nodes, dtype=float).ravel())
    if x.size < 1:
        raise ValidationError("divided difference needs at least one node")
    k = x.size - 1
    if k > model.max_order:
        raise UnsupportedConfigError(
            f"order-{k} divided difference needs {k} continuous derivatives, "
            f"model has {model.max_order}"
        )
    lo, hi = model.domain
    if x[0] < lo - 1e-12 or x[-1] > hi + 1e-12:
        raise ValidationError(
            f"nodes [{x[0]:.6g}, {x[-1]:.6g}] leave the model domain [{lo}, {hi}]"
        )
    return model, x, k


def _recursion(model, x):
    vals = np.asarray(model.eval(x), dtype=float)
    k = x.size - 1
    for level in range(1, k + 1):
        vals = (vals[1:] - vals[:-1]) / (x[level:] - x[:-level])
    return float(vals[0])


def divided_difference(model, nodes, quad_tol=1e-9):
    """f^[k] at k+1 nodes (any multiset inside the model domain)."""
    model, x, k = _prepare(model, nodes)
    if k == 0:
        return float(model.eval(x[0]))
    gaps = np.diff(x)
    spread = x[-1] - x[0]
    if gaps.min() < CONFLUENCE_FACTOR * (1.0 + spread):
        spec = MomentumSpec.from_divided_difference(model, k)
        return momentum_quadrature(spec, x, tol=quad_tol)
    return _recursion(model, x)


def divided_difference_via_momentum(model, nodes, tol=1e-9):
    """f^[k] forced through the integral representation (oracle route)."""
    model, x, k = _prepare(model, nodes)
    if k == 0:
        return float(model.eval(x[0]))
    spec = MomentumSpec.from_divided_difference(model, k)
    return momentum_quadrature(spec, x, tol=tol)


def tilde_divided_difference(model, nodes, quad_tol=1e-9):
    """g^[k-1] with g = f', the reduced symbol behind the trace forms.

    Equivalently the order-(k-1) momentum with kernel f^(k) and constant
    weight, where k-1 is the number of gaps between the supplied nodes.
    """
    model = as_kernel(model)
    return divided_difference(model.derivative_model(1), nodes, quad_tol=quad_tol)


@dataclass(frozen=True)
class DividedDifference:
    """Symbol descriptor: order-k divided difference of a scalar model."""

    model: ScalarFunctionModel
    order: int

    def __post_init__(self):
        if self.order < 0:
            raise ValidationError("divided-difference order must be >= 0")
        if self.order > self.model.max_order:
            raise UnsupportedConfigError(
                f"order-{self.order} divided difference needs {self.order} "
                f"continuous derivatives, model has {self.model.max_order}"
            )

    def __call__(self, values, quad_tol=1e-9):
        values = np.asarray(values, dtype=float)
        if values.shape != (self.order + 1,):
            raise ValidationError(
                f"symbol takes {self.order + 1} arguments, got {values.shape}"
            )
        return divided_difference(self.model, values, quad_tol=quad_tol)
