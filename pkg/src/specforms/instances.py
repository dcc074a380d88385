"""Seeded test-instance generation with a portable, documented RNG.

Randomness comes from SplitMix64, a counter-based 64-bit generator small
enough to restate exactly (constants below), so any implementation in
any language can reproduce the same matrices bit for bit:

    state <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z <- state
    z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9  mod 2^64
    z <- (z XOR (z >> 27)) * 0x94D049BB133111EB  mod 2^64
    output z XOR (z >> 31)

Uniforms map the top 53 bits into (0, 1]; normal pairs come from the
Box-Muller transform. A Hermitian draw fills G row-major with entries
(a + ib)/1, a and b standard normal in that order, and symmetrizes to
(G + G*)/2.
"""

import numpy as np

from .errors import ValidationError
from .spectral import HermitianMatrix

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

PROFILES = ("generic", "singular", "clustered")
CLUSTER_GAP = 1e-7
SINGULAR_COUPLING = 1.0
SINGULAR_BACKGROUND = 0.15


class SplitMix64:
    """The documented counter-based generator; see the module docstring."""

    def __init__(self, seed):
        self.state = int(seed) & MASK64
        self._spare = None

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def uniform(self):
        """Uniform on (0, 1]: top 53 bits, shifted off zero."""
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def normal(self):
        if self._spare is not None:
            out, self._spare = self._spare, None
            return out
        u1 = self.uniform()
        u2 = self.uniform()
        r = np.sqrt(-2.0 * np.log(u1))
        self._spare = r * np.sin(2.0 * np.pi * u2)
        return r * np.cos(2.0 * np.pi * u2)

    def normals(self, n):
        return np.array([self.normal() for _ in range(int(n))])

    def hermitian(self, dim):
        """(G + G*)/2 with complex standard-normal entries, row-major fill."""
        dim = int(dim)
        g = np.empty((dim, dim), dtype=complex)
        for i in range(dim):
            for j in range(dim):
                a = self.normal()
                b = self.normal()
                g[i, j] = a + 1j * b
        return (g + g.conj().T) / 2.0


def _schatten_scale(matrix, p):
    lam = np.linalg.eigvalsh(matrix)
    return float(np.sum(np.abs(lam) ** p)) ** (1.0 / p)


def generate_instance(seed, dim, profile="generic", p=2.0):
    """Deterministic (H, V) pair for one seed.

    H is Hermitian with ||H||_p = 1 (so its spectrum sits in [-1, 1]);
    V is Hermitian with ||V||_inf = 1. Profiles:

    - "generic": plain normalized draws.
    - "singular": the last row and column of H are exactly zero, making
      e_{d-1} an exact null vector; V is a unit diagonal coupling into
      that direction plus a damped random background, so the null
      eigenvalue moves at order t and the kink of |x|^p dominates the
      Taylor remainder across the whole default t grid.
    - "clustered": eigenvalue pairs are pinched to distance 1e-7
      (indices 0-1, and 2-3 when the dimension allows) with the norm
      held at 0.99, stressing confluent divided differences.
    """
    dim = int(dim)
    if dim < 2:
        raise ValidationError(f"instance dimension must be >= 2, got {dim}")
    if profile not in PROFILES:
        raise ValidationError(f"unknown profile {profile!r}; choose from {PROFILES}")
    p = float(p)
    if p < 1.0:
        raise ValidationError(f"instance normalization needs p >= 1, got {p}")

    rng = SplitMix64(seed)
    h = rng.hermitian(dim)
    v = rng.hermitian(dim)

    if profile == "generic":
        h = h / _schatten_scale(h, p)
    elif profile == "singular":
        h[dim - 1, :] = 0.0
        h[:, dim - 1] = 0.0
        h = h / _schatten_scale(h, p)
        v = v * (SINGULAR_BACKGROUND / np.linalg.norm(v, ord=2))
        v[dim - 1, dim - 1] += SINGULAR_COUPLING
    else:  # clustered
        w, u = np.linalg.eigh(h)

        def pinch(vals):
            vals[1] = vals[0] + CLUSTER_GAP
            if dim >= 4:
                vals[3] = vals[2] + CLUSTER_GAP
            return vals

        # pinch, rescale to norm 0.99, and re-pin the gaps; the second
        # pinch moves the norm by at most a gap's width, keeping it < 1
        w = pinch(w)
        w = pinch(w * (0.99 / float(np.sum(np.abs(w) ** p)) ** (1.0 / p)))
        h = (u * w) @ u.conj().T

    v = v / np.linalg.norm(v, ord=2)
    return HermitianMatrix(h), HermitianMatrix(v)
