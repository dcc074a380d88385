"""Hermitian matrices, eigendecompositions, and Schatten norms.

Everything downstream (operator integrals, derivative forms) works in an
eigenbasis, so this module pins down the conventions once: validated
Hermitian storage, ascending eigenvalues, a deterministic eigenvector
phase (first nonzero component real positive), and scalar functions
applied through the spectral theorem.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EigenSolverError, ValidationError
from .util import as_complex_matrix, operator_norm

HERMITICITY_TOL = 1e-12
RESIDUAL_TOL = 1e-10
# Scalar models are calibrated on this interval; spectra must stay inside.
WORKING_INTERVAL = (-2.0, 2.0)


@dataclass(frozen=True)
class HermitianMatrix:
    """A square complex matrix validated to be Hermitian.

    The stored array is the symmetrized (A + A*)/2 of the input, which
    removes roundoff-level asymmetry once the 1e-12 entrywise check has
    passed, and is marked read-only.
    """

    matrix: np.ndarray

    def __post_init__(self):
        a = as_complex_matrix(self.matrix)
        if a.shape[0] < 1:
            raise ValidationError("matrix must have dimension >= 1")
        gap = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
        if gap > HERMITICITY_TOL:
            raise ValidationError(
                f"matrix is not Hermitian: max |A - A*| = {gap:.3e} > {HERMITICITY_TOL:.0e}"
            )
        sym = (a + a.conj().T) / 2.0
        sym.setflags(write=False)
        object.__setattr__(self, "matrix", sym)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def to_dict(self):
        return {
            "dim": self.dim,
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            dim = int(data["dim"])
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed matrix payload: {exc}") from exc
        if re.shape != (dim, dim) or im.shape != (dim, dim):
            raise ValidationError(
                f"matrix payload shapes {re.shape}/{im.shape} do not match dim {dim}"
            )
        return cls(re + 1j * im)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and phase-fixed orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source: HermitianMatrix = field(repr=False)

    @property
    def dim(self):
        return self.eigenvalues.size

    def reconstruct(self):
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T

    def project_directions(self, v):
        """Conjugate a matrix into the eigenbasis: U* V U."""
        u = self.eigenvectors
        return u.conj().T @ as_complex_matrix(v) @ u


def _fix_phases(u):
    """Rotate each column so its first non-negligible entry is real positive."""
    u = np.array(u, dtype=complex)
    d = u.shape[0]
    for j in range(d):
        col = u[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        lead = col[idx[0]] if idx.size else 1.0
        u[:, j] = col * (np.conj(lead) / abs(lead))
    return u


def eigendecompose(h):
    """Spectral decomposition of a Hermitian matrix with fixed conventions."""
    if not isinstance(h, HermitianMatrix):
        h = HermitianMatrix(h)
    try:
        w, u = np.linalg.eigh(h.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}") from exc
    u = _fix_phases(u)
    scale = 1.0 + (abs(w[0]) if w.size else 0.0) + (abs(w[-1]) if w.size else 0.0)
    resid = np.max(np.abs((u * w) @ u.conj().T - h.matrix))
    ortho = np.max(np.abs(u.conj().T @ u - np.eye(h.dim)))
    if resid > RESIDUAL_TOL * scale or ortho > RESIDUAL_TOL:
        raise EigenSolverError(
            f"eigendecomposition residuals too large (recon {resid:.3e}, ortho {ortho:.3e})",
            residual=max(resid, ortho),
        )
    w = w.copy()
    w.setflags(write=False)
    u.setflags(write=False)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=u, source=h)


@dataclass(frozen=True)
class SchattenExponent:
    """An exponent p in (1, inf) with its differentiability order m.

    m is the unique integer with m < p <= m + 1; the p-th power of the
    Schatten p-norm admits m derivative orders on Hermitian matrices.
    """

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not np.isfinite(p) or p <= 1.0:
            raise ValidationError(f"exponent must satisfy 1 < p < inf, got {p}")
        object.__setattr__(self, "p", p)

    @property
    def m(self):
        return int(np.ceil(self.p)) - 1

    @property
    def holder_alpha(self):
        """Residual smoothness p - m, in (0, 1]."""
        return self.p - self.m


def singular_values(a):
    """Singular values in descending order (any complex matrix)."""
    m = np.asarray(getattr(a, "matrix", a), dtype=complex)
    if m.ndim != 2:
        raise ValidationError(f"expected a matrix, got shape {m.shape}")
    return np.linalg.svd(m, compute_uv=False)


def schatten_norm(a, p):
    """Schatten p-norm: l^p norm of the singular values, p >= 1."""
    p = float(p)
    if p < 1.0:
        raise ValidationError(f"Schatten norm needs p >= 1, got {p}")
    s = singular_values(a)
    if not s.size:
        return 0.0
    if np.isinf(p):
        return float(s[0])
    top = s[0]
    if top == 0.0:
        return 0.0
    # Factor out the largest singular value to avoid overflow for large p.
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def truncated_norm(a, p, nu):
    """l^p norm of the nu largest singular values."""
    s = singular_values(a)
    nu = int(nu)
    if not 1 <= nu <= s.size:
        raise ValidationError(f"truncation rank {nu} outside 1..{s.size}")
    s = s[:nu]
    top = s[0]
    if top == 0.0:
        return 0.0
    return float(top * np.sum((s / top) ** float(p)) ** (1.0 / float(p)))


def schatten_power_trace(decomp, model):
    """tr f(H) evaluated from eigenvalues; for f = |x|^p this is ||H||_p^p."""
    lam = decomp.eigenvalues
    _check_domain(model, lam)
    return float(np.sum(model.eval(lam)))


def _check_domain(model, values):
    lo, hi = model.domain
    v = np.asarray(values, dtype=float)
    if v.size and (v.min() < lo - 1e-12 or v.max() > hi + 1e-12):
        raise ValidationError(
            f"values [{v.min():.6g}, {v.max():.6g}] leave the model domain [{lo}, {hi}]"
        )


def apply_scalar_function(model, decomp):
    """f(H) = U diag(f(lambda)) U* for a scalar model f."""
    lam = decomp.eigenvalues
    _check_domain(model, lam)
    u = decomp.eigenvectors
    out = (u * model.eval(lam)) @ u.conj().T
    return HermitianMatrix((out + out.conj().T) / 2.0)
