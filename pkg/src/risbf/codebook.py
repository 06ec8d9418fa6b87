"""One-hot encodings of discrete phases and phase differences, and the affine
expansion of the whitened Gram matrix in those binaries.

For b control bits the codebook holds the 2^b phases m*pi/2^(b-1).  The
working angle axis spans all L = 2^(b+1) - 1 multiples m in
[-(2^b - 1), 2^b - 1] so that a single axis serves both absolute phases
(negative entries masked off) and pairwise differences (full range).

The key algebraic fact used throughout: with q(t) = (j + e^{jt}) / 2,

    4 * q(t) * conj(q(t')) = 1 + sin t + sin t' + cos(t - t')
                             + j * (sin(t - t') + cos t' - cos t)

which is affine in the one-hot selectors once sin/cos are read off the
codebook tables.  The whitened Gram sum(q_p q_q^* A[p, q]) therefore becomes
an affine Hermitian-matrix-valued function of the binaries.
"""

from dataclasses import dataclass

import numpy as np

from .config import _freeze


class NotInCodebookError(ValueError):
    """Phase does not sit on the discrete grid."""


class InconsistentPairError(ValueError):
    """Pair selector does not encode the difference of its two phases."""


@dataclass(frozen=True)
class PhaseCodebook:
    """Angle axis a, its cosine/sine tables and the negative-angle mask."""

    b_bits: int
    a: np.ndarray
    c: np.ndarray
    s: np.ndarray
    e_mask: np.ndarray

    def __post_init__(self):
        for name in ("a", "c", "s", "e_mask"):
            _freeze(self, name, getattr(self, name))

    @classmethod
    def build(cls, b_bits):
        if b_bits < 1:
            raise ValueError("b_bits must be >= 1")
        m = np.arange(-(2 ** b_bits - 1), 2 ** b_bits)
        a = m * np.pi / 2.0 ** (b_bits - 1)
        mask = np.zeros(a.size, dtype=int)
        mask[: 2 ** b_bits - 1] = 1
        return cls(b_bits=b_bits, a=a, c=np.cos(a), s=np.sin(a), e_mask=mask)

    @property
    def length(self):
        return self.a.size

    @property
    def n_levels(self):
        return 2 ** self.b_bits

    @property
    def zero_offset(self):
        """Index of angle 0 on the axis."""
        return 2 ** self.b_bits - 1

    def phase_values(self):
        """The 2^b codebook phases in [0, 2*pi)."""
        return self.a[self.zero_offset:]

    def _level_of(self, theta):
        m = float(theta) * 2.0 ** (self.b_bits - 1) / np.pi
        level = int(round(m))
        if abs(m - level) > 1e-9 or not 0 <= level < self.n_levels:
            raise NotInCodebookError(f"theta={theta!r} is not a codebook phase")
        return level

    def encode(self, theta):
        """One-hot selector for a codebook phase; masked entries stay zero."""
        x = np.zeros(self.length, dtype=int)
        x[self.zero_offset + self._level_of(theta)] = 1
        return x

    def decode(self, x):
        x = np.asarray(x)
        if x.shape != (self.length,) or np.abs(x).sum() != 1:
            raise ValueError("selector must be one-hot over the angle axis")
        if int(self.e_mask @ x) != 0:
            raise ValueError("selector points at a masked (negative) angle")
        theta = float(self.a[int(np.argmax(x))])
        return theta

    def pair_onehot(self, theta, theta_prime):
        """One-hot selector for the difference theta - theta_prime."""
        delta = self._level_of(theta) - self._level_of(theta_prime)
        y = np.zeros(self.length, dtype=int)
        y[self.zero_offset + delta] = 1
        return y


def pair_grams(element_stack, phi, powers):
    """Pairwise whitened channel Grams A[p, q] (each K x K).

    ``element_stack`` has shape (n_el, K, N_t).  Each slice is scaled by the
    per-user reflection coefficient and 1/sqrt(p_k); A[p, q] is then the
    cross product of slices p and q, so A[q, p] = A[p, q]^H.
    """
    stack = np.asarray(element_stack, dtype=complex)
    weights = (np.asarray(phi, dtype=complex)
               / np.sqrt(np.asarray(powers, dtype=float)))
    t = stack * weights[None, :, None]
    return np.einsum("pkn,qln->pqkl", t, t.conj())


def ordered_pairs(n_el):
    return [(p, q) for p in range(n_el) for q in range(p + 1, n_el)]


class GramExpansion:
    """Affine map from one-hot phase selectors to the whitened K x K Gram.

    Stores one Hermitian coefficient matrix per binary variable plus the
    constant term, so both evaluation and linear-cut extraction are plain
    contractions.
    """

    def __init__(self, pair_gram, codebook):
        pair_gram = np.asarray(pair_gram, dtype=complex)
        n_el = pair_gram.shape[0]
        k = pair_gram.shape[2]
        L = codebook.length
        self.codebook = codebook
        self.n_el = n_el
        self.k = k
        self.pairs = ordered_pairs(n_el)
        self.pair_index = {pq: i for i, pq in enumerate(self.pairs)}

        g0 = np.zeros((k, k), dtype=complex)
        x_coeffs = np.zeros((n_el, L, k, k), dtype=complex)
        y_coeffs = np.zeros((len(self.pairs), L, k, k), dtype=complex)
        c, s = codebook.c, codebook.s
        for p in range(n_el):
            app = pair_gram[p, p]
            g0 += app / 2.0
            x_coeffs[p] += s[:, None, None] * (app / 2.0)
        for idx, (p, q) in enumerate(self.pairs):
            apq = pair_gram[p, q]
            sym = (apq + apq.conj().T) / 4.0
            skew = 1j * (apq - apq.conj().T) / 4.0
            g0 += sym
            x_coeffs[p] += s[:, None, None] * sym - c[:, None, None] * skew
            x_coeffs[q] += s[:, None, None] * sym + c[:, None, None] * skew
            y_coeffs[idx] = c[:, None, None] * sym + s[:, None, None] * skew
        self.g0 = g0
        self.x_coeffs = x_coeffs
        self.y_coeffs = y_coeffs

    def evaluate(self, xs, ys, check=True):
        """Gram at the given selectors; equals the direct whitened product
        P^{-1/2} F F^H P^{-1/2} at every consistent one-hot assignment."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.shape != (self.n_el, self.codebook.length):
            raise ValueError("xs must stack one selector per element")
        if ys.shape != (len(self.pairs), self.codebook.length):
            raise ValueError("ys must stack one selector per ordered pair")
        if check:
            a = self.codebook.a
            for idx, (p, q) in enumerate(self.pairs):
                lhs = a @ (xs[p] - xs[q])
                rhs = a @ ys[idx]
                if abs(lhs - rhs) > 1e-9:
                    raise InconsistentPairError(
                        f"pair {(p, q)}: a.(x - x') = {lhs!r} but a.y = {rhs!r}")
        return (self.g0
                + np.einsum("plij,pl->ij", self.x_coeffs, xs)
                + np.einsum("plij,pl->ij", self.y_coeffs, ys))

    def selectors_for(self, thetas_flat):
        """Stacked (xs, ys) one-hot selectors for a flat list of phases."""
        cb = self.codebook
        xs = np.array([cb.encode(t) for t in thetas_flat]).reshape(-1, cb.length)
        ys = np.array([cb.pair_onehot(thetas_flat[p], thetas_flat[q])
                       for p, q in self.pairs]).reshape(-1, cb.length)
        return xs, ys


def gram_affine_expansion(pair_gram, xs, ys, codebook):
    """One-shot affine-expansion evaluation (builds the map and evaluates)."""
    return GramExpansion(pair_gram, codebook).evaluate(xs, ys)


__all__ = [
    "NotInCodebookError", "InconsistentPairError", "PhaseCodebook",
    "pair_grams", "ordered_pairs", "GramExpansion", "gram_affine_expansion",
]
