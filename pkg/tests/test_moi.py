"""Tests for multiple operator integrals (eigenprojection tensor path)."""

import numpy as np
import pytest

from specforms.divided import DividedDifference
from specforms.errors import ValidationError
from specforms.functions import Monomial, Polynomial, PowerAbs
from specforms.instances import SplitMix64
from specforms.moi import (
    MoiRequest,
    SeparableSymbol,
    algebraic_shift,
    binned_eigenvalues,
    moi_binned,
    moi_exact,
    moi_separable,
    perturbation_identity,
)
from specforms.momenta import MomentumSpec
from specforms.spectral import eigendecompose
from specforms.util import frobenius


def random_hermitian(rng, dim, scale=1.0):
    a = rng.standard_normal((dim, dim))
    h = (a + a.T) / 2.0
    # keep spectra inside the kernels' working interval
    return scale * h / max(1.0, np.linalg.norm(h, ord=2))


def test_first_order_square_function_hand_case():
    # H = diag(0, 1), V the flip: d/dt (H + tV)^2 at t=0 is HV + VH.
    h = np.diag([0.0, 1.0])
    v = np.array([[0.0, 1.0], [1.0, 0.0]])
    dec = eigendecompose(h)
    req = MoiRequest((dec, dec), (v,), DividedDifference(Monomial(2), 1))
    got = moi_exact(req)
    np.testing.assert_allclose(got.real, h @ v + v @ h, atol=1e-12)
    np.testing.assert_allclose(got.imag, 0.0, atol=1e-12)


def test_first_order_cubic_matches_product_rule():
    rng = np.random.default_rng(7)
    for _ in range(5):
        h = random_hermitian(rng, 4)
        v = random_hermitian(rng, 4)
        dec = eigendecompose(h)
        got = moi_exact(MoiRequest((dec, dec), (v,), DividedDifference(Monomial(3), 1)))
        want = h @ h @ v + h @ v @ h + v @ h @ h
        np.testing.assert_allclose(got.real, want, atol=1e-10)


def test_constant_symbol_collapses_to_product():
    # phi identically c contracts the projections away: T = c * V1 V2.
    rng = np.random.default_rng(3)
    h = random_hermitian(rng, 4)
    v1 = random_hermitian(rng, 4)
    v2 = random_hermitian(rng, 4)
    dec = eigendecompose(h)
    got = moi_exact(MoiRequest((dec, dec, dec), (v1, v2), lambda *vals: 0.5))
    np.testing.assert_allclose(got.real, 0.5 * v1 @ v2, atol=1e-11)


def test_multilinearity_in_each_slot():
    rng = np.random.default_rng(12)
    h = random_hermitian(rng, 3)
    dec = eigendecompose(h)
    symbol = DividedDifference(PowerAbs(2.5), 2)
    v, w, u = (random_hermitian(rng, 3) for _ in range(3))

    def integral(p1, p2):
        return moi_exact(MoiRequest((dec, dec, dec), (p1, p2), symbol))

    left = integral(2.0 * v + w, u)
    np.testing.assert_allclose(
        left, 2.0 * integral(v, u) + integral(w, u), atol=1e-9
    )
    right = integral(u, v - 3.0 * w)
    np.testing.assert_allclose(
        right, integral(u, v) - 3.0 * integral(u, w), atol=1e-9
    )


def test_symmetric_symbol_gives_hermitian_output():
    rng = np.random.default_rng(21)
    h = random_hermitian(rng, 5)
    v = random_hermitian(rng, 5)
    dec = eigendecompose(h)
    for order in (1, 2):
        got = moi_exact(
            MoiRequest(
                (dec,) * (order + 1), (v,) * order, DividedDifference(PowerAbs(3.5), order)
            )
        )
        np.testing.assert_allclose(got, got.conj().T, atol=1e-10)


def test_binned_eigenvalues_snap_left():
    np.testing.assert_allclose(
        binned_eigenvalues([0.3, -0.3, 0.25], 4), [0.25, -0.5, 0.25]
    )
    with pytest.raises(ValidationError):
        binned_eigenvalues([0.1], 0)


def test_binned_integral_exact_on_grid():
    # Eigenvalues already on the 1/n grid are fixed points of the binning.
    h = np.diag([0.0, 0.5, -0.5, 1.0])
    v = np.ones((4, 4)) * 0.1
    v = (v + v.T) / 2.0
    dec = eigendecompose(h)
    req = MoiRequest((dec, dec), (v,), DividedDifference(Monomial(3), 1))
    np.testing.assert_allclose(moi_binned(req, 2), moi_exact(req), atol=1e-14)


def test_binned_integral_converges_to_exact():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 4, scale=0.4)
    v = random_hermitian(rng, 4)
    dec = eigendecompose(h)
    req = MoiRequest((dec, dec), (v,), DividedDifference(PowerAbs(2.5), 1))
    exact = moi_exact(req)
    errs = [frobenius(moi_binned(req, n) - exact) for n in (16, 64, 256)]
    assert errs[2] < errs[1] < errs[0]
    # first-order rate: 16x more bins should shrink the error about 16x
    assert errs[2] < 0.12 * errs[0]


def test_algebraic_shift_hand_case():
    # s = (1, 0) with phi = 1 multiplies H onto the left: both sides H V.
    rng = np.random.default_rng(9)
    h = random_hermitian(rng, 3)
    v = random_hermitian(rng, 3)
    dec = eigendecompose(h)
    req = MoiRequest((dec, dec), (v,), lambda *vals: 1.0)
    lhs, rhs = algebraic_shift(req, (1, 0))
    np.testing.assert_allclose(lhs, dec.source.matrix @ v, atol=1e-12)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_algebraic_shift_random_residuals():
    rng = np.random.default_rng(17)
    symbol = DividedDifference(PowerAbs(2.5), 2)
    for _ in range(5):
        decs = tuple(eigendecompose(random_hermitian(rng, 3)) for _ in range(3))
        perts = tuple(random_hermitian(rng, 3) for _ in range(2))
        req = MoiRequest(decs, perts, symbol)
        lhs, rhs = algebraic_shift(req, (1, 2, 0))
        assert frobenius(lhs - rhs) <= 1e-10 * (1.0 + frobenius(lhs))


def test_separable_matches_tensor_path():
    rng = SplitMix64(77)
    nprng = np.random.default_rng(77)
    for _ in range(5):
        terms = []
        for _ in range(3):
            weight = 2.0 * rng.uniform() - 1.0
            factors = tuple(
                Polynomial(tuple(2.0 * rng.uniform() - 1.0 for _ in range(3)))
                for _ in range(3)
            )
            terms.append((weight, factors))
        symbol = SeparableSymbol(tuple(terms))
        decs = tuple(eigendecompose(random_hermitian(nprng, 3)) for _ in range(3))
        perts = tuple(random_hermitian(nprng, 3) for _ in range(2))
        via_product = moi_separable(symbol, decs, perts)
        via_tensor = moi_exact(MoiRequest(decs, perts, symbol))
        np.testing.assert_allclose(via_product, via_tensor, atol=1e-10)


def test_perturbation_identity_polynomial_is_exact():
    # For f = x^2 the first quotient has constant second quotient, so the
    # companion formula closes exactly in floating point.
    rng = np.random.default_rng(31)
    spec = MomentumSpec.from_divided_difference(Monomial(2), 1)
    a = random_hermitian(rng, 4, scale=0.5)
    b = random_hermitian(rng, 4, scale=0.5)
    h = random_hermitian(rng, 4, scale=0.5)
    v = random_hermitian(rng, 4)
    assert perturbation_identity(spec, a, b, (eigendecompose(h),), (v,)) <= 1e-12


def test_perturbation_identity_kink_kernel():
    rng = np.random.default_rng(41)
    spec = MomentumSpec.from_divided_difference(PowerAbs(3.5), 1)
    a = random_hermitian(rng, 3, scale=0.5)
    b = random_hermitian(rng, 3, scale=0.5)
    h = random_hermitian(rng, 3, scale=0.5)
    v = random_hermitian(rng, 3)
    assert perturbation_identity(spec, a, b, (eigendecompose(h),), (v,)) <= 1e-6


def test_request_validation():
    rng = np.random.default_rng(2)
    h3 = eigendecompose(random_hermitian(rng, 3))
    h4 = eigendecompose(random_hermitian(rng, 4))
    v3 = random_hermitian(rng, 3)
    sym = DividedDifference(PowerAbs(2.5), 1)
    with pytest.raises(ValidationError):
        MoiRequest((h3, h4), (v3,), sym)  # mixed dimensions
    with pytest.raises(ValidationError):
        MoiRequest((h3,), (), sym)  # order zero
    with pytest.raises(ValidationError):
        MoiRequest((h3,) * 5, (v3,) * 4, sym)  # order above the cap
    with pytest.raises(ValidationError):
        MoiRequest((h3, h3, h3), (v3,), sym)  # count mismatch
    with pytest.raises(ValidationError):
        moi_exact(MoiRequest((h3, h3), (v3,), lambda *vals: float("nan")))


def test_separable_symbol_validation():
    one = Polynomial((1.0,))
    with pytest.raises(ValidationError):
        SeparableSymbol(())
    with pytest.raises(ValidationError):
        SeparableSymbol(((1.0, (one, one)), (1.0, (one, one, one))))
    with pytest.raises(ValidationError):
        moi_separable(DividedDifference(PowerAbs(2.5), 1), (), ())
    sym = SeparableSymbol(((2.0, (one, one)),))
    with pytest.raises(ValidationError):
        moi_separable(sym, (np.eye(2),), ())  # missing a perturbation
