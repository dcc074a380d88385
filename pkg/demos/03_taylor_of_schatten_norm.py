"""
Taylor expanding the p-th Schatten power
========================================

phi(H) = tr |H|^p has m = ceil(p) - 1 classical derivatives.  The
derivative forms delta^(k) give the Taylor polynomial of
t -> phi(H + tV); the remainder decays like t^p when the spectrum of H
touches zero (the kink bites) and like t^(m+1) otherwise.  A
finite-difference oracle cross-checks every derivative order.
"""

import math

import numpy as np

from specforms.forms import (
    FrechetForm,
    delta_symmetric,
    fd_oracle,
    taylor_expand,
    taylor_integral_form,
)
from specforms.instances import generate_instance
from specforms.spectral import SchattenExponent, eigendecompose
from specforms.util import frobenius

# ---------------------------------------------------------------------------
# Derivatives of t -> tr |H + tV|^p against a finite-difference oracle
# ---------------------------------------------------------------------------
p = 3.5
m = SchattenExponent(p).m
h, v = generate_instance(seed=9, dim=5, profile="generic", p=p)
dec = eigendecompose(h)
print(f"p = {p} admits m = {m} derivative orders; comparing each to an "
      "order-4 difference stencil:")
for k in range(1, m + 1):
    form = FrechetForm(base=dec, exponent=p, order=k)
    series = math.factorial(k) * delta_symmetric(form, [v.matrix] * k)
    fd, err = fd_oracle(h.matrix, v.matrix, p, k)
    print(f"  k = {k}: form {series:+.10f}  stencil {fd:+.10f}  "
          f"gap {abs(series - fd):.2e} (stencil err est {err:.1e})")

# ---------------------------------------------------------------------------
# Remainder slopes: the kink is visible in the decay rate
# ---------------------------------------------------------------------------
print("\nremainder decay of phi(H + tV) minus its Taylor polynomial:")
for p in (1.5, 2.5, 3.5):
    row = []
    for profile in ("generic", "singular"):
        h, v = generate_instance(seed=2, dim=4, profile=profile, p=p)
        report = taylor_expand(h.matrix, v.matrix, p)
        row.append(f"{profile} slope {report.slope:.3f}")
    mm = SchattenExponent(p).m
    print(f"  p = {p} (smooth order would be {mm + 1}): " + ",  ".join(row))

# Singular spectra pin the slope at p itself; generic spectra show the
# full polynomial order m + 1.

# ---------------------------------------------------------------------------
# The exact integral form of the remainder closes the expansion
# ---------------------------------------------------------------------------
p = 2.5
h0, v = generate_instance(seed=5, dim=3, profile="generic", p=p)
step = 0.3 * v.matrix / frobenius(v.matrix)
lhs, rhs = taylor_integral_form(h0.matrix, h0.matrix + step, p)
print(f"\nintegral form at p = {p}: phi(B) = {lhs:.12f}, "
      f"polynomial + integral remainder = {rhs:.12f}, "
      f"gap {abs(lhs - rhs):.2e}")
