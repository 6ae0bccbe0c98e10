"""Real univariate polynomials and their roots via balanced companion matrices."""

import math

import numpy as np

from ..errors import NumericFailure
from .eigen import Spectrum, balance, hqr


class Poly:
    """Polynomial with real coefficients stored in ascending order.

    ``labels`` optionally records where each coefficient came from (e.g.
    ``"K0*G2 - H2"``); it is carried through for reporting only.
    """

    def __init__(self, coeffs, trim_tol=0.0, labels=None):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float)).copy()
        if not np.all(np.isfinite(c)):
            raise ValueError("Poly: non-finite coefficient")
        scale = np.max(np.abs(c)) if c.size else 0.0
        n = len(c)
        while n > 1 and abs(c[n - 1]) <= trim_tol * scale:
            n -= 1
        self.coeffs = c[:n]
        self.labels = list(labels[:n]) if labels is not None else None

    @property
    def degree(self):
        if len(self.coeffs) == 1 and self.coeffs[0] == 0.0:
            return -1
        return len(self.coeffs) - 1

    def __call__(self, x):
        """Horner evaluation; works for real or complex scalars and arrays."""
        acc = np.zeros_like(np.asarray(x, dtype=complex if np.iscomplexobj(x) else float))
        for c in self.coeffs[::-1]:
            acc = acc * x + c
        return acc

    def derivative(self):
        if self.degree < 1:
            return Poly([0.0])
        k = np.arange(1, len(self.coeffs))
        return Poly(self.coeffs[1:] * k)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.coeffs * float(other))
        return Poly(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly([float(other)])
        n = max(len(self.coeffs), len(other.coeffs))
        out = np.zeros(n)
        out[: len(self.coeffs)] += self.coeffs
        out[: len(other.coeffs)] += other.coeffs
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(-self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Poly) else -float(other))

    def __pow__(self, k):
        out = Poly([1.0])
        for _ in range(int(k)):
            out = out * self
        return out

    def __repr__(self):
        return f"Poly({self.coeffs.tolist()!r})"

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        c = np.array([lead], dtype=complex)
        for r in roots:
            c = np.convolve(c, [-r, 1.0])
        if np.max(np.abs(c.imag), initial=0.0) > 1e-9 * np.max(np.abs(c)):
            raise ValueError("from_roots: roots are not closed under conjugation")
        return cls(c.real)


def companion(coeffs):
    """Upper-Hessenberg companion matrix of the monic polynomial ``coeffs``."""
    c = np.asarray(coeffs, dtype=float)
    n = len(c) - 1
    C = np.zeros((n, n))
    C[0, :] = -c[-2::-1] / c[-1]
    if n > 1:
        C[np.arange(1, n), np.arange(n - 1)] = 1.0
    return C


def _scaled(coeffs):
    """Rescale omega = sigma * x so that |c0| and |cn| match; returns (d, sigma).

    Works in log space because the raw coefficients can span ~60 decades.
    """
    c = np.asarray(coeffs, dtype=float)
    n = len(c) - 1
    sigma = math.exp((math.log(abs(c[0])) - math.log(abs(c[-1]))) / n)
    logs = np.full(n + 1, -np.inf)
    nz = c != 0.0
    k = np.arange(n + 1)
    logs[nz] = np.log(np.abs(c[nz])) + k[nz] * math.log(sigma)
    top = np.max(logs[nz])
    d = np.where(nz, np.sign(c) * np.exp(logs - top), 0.0)
    return d, sigma


def _polish(p, dp, z, iters):
    for _ in range(iters):
        f = p(z)
        g = dp(z)
        if g == 0:
            break
        step = f / g
        z_new = z - step
        if abs(p(z_new)) >= abs(f):
            break
        z = z_new
    return z


def polynomial_roots(p, scale=True, balanced=True, polish_iters=3, max_its=120):
    """All complex roots of ``p`` (degree >= 1) as a :class:`Spectrum`.

    Exact zero roots are factored out first. The remaining polynomial is
    rescaled (``scale``), turned into a companion matrix, balanced, and
    solved by the Francis QR iteration; each root is then Newton-polished on
    the original coefficients, keeping a step only if it lowers ``|p|``.
    If QR fails on the balanced matrix it is retried once without balancing.
    """
    if not isinstance(p, Poly):
        p = Poly(p)
    if p.degree < 1:
        raise ValueError("polynomial_roots: degree must be >= 1")
    c = p.coeffs
    nzero = int(np.argmax(c != 0.0))
    c = c[nzero:]
    roots_re = [0.0] * nzero
    roots_im = [0.0] * nzero
    if len(c) > 1:
        if scale and len(c) > 2:
            d, sigma = _scaled(c)
        else:
            d, sigma = c / np.max(np.abs(c)), 1.0
        C = companion(d)
        try:
            wr, wi = hqr(balance(C)[0] if balanced else C, max_its=max_its)
        except NumericFailure as exc:
            if not balanced:
                pr, pi = exc.partial
                raise NumericFailure(
                    "polynomial_roots: QR did not converge",
                    partial=Spectrum.from_pairs(sigma * pr, sigma * pi),
                ) from exc
            # balancing occasionally produces a cycling shift pattern; retry plain
            return polynomial_roots(p, scale, False, polish_iters, max_its)
        z = sigma * (wr + 1j * wi)
        if polish_iters:
            dp = p.derivative()
            z = np.array([_polish(p, dp, complex(zi), polish_iters) for zi in z])
            # keep conjugate symmetry exact after polishing
            for i, zi in enumerate(z):
                if wi[i] == 0.0:
                    z[i] = complex(zi.real, 0.0)
        roots_re += list(z.real)
        roots_im += list(z.imag)
    return Spectrum.from_pairs(roots_re, roots_im)


def root_residual_ok(p, r, rel=1e-8):
    """The acceptance test for a computed root: |p(r)| <= rel*||p||_inf*max(1,|r|)^deg."""
    bound = rel * np.max(np.abs(p.coeffs)) * max(1.0, abs(r)) ** p.degree
    return abs(p(r)) <= bound
