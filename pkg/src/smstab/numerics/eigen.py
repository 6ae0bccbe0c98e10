"""Dense nonsymmetric eigenvalues: balancing, Hessenberg reduction, Francis QR.

The QR sweep is the classical real double-shift iteration (EISPACK ``hqr``
lineage). Complex conjugate pairs are produced from 2x2 trailing blocks as
explicit (re, im) pairs, so the core never touches complex arithmetic.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NumericFailure

RADIX = 2.0


@dataclass(frozen=True)
class Spectrum:
    """Complex values sorted by descending real part (ties: descending imag)."""

    values: np.ndarray

    @classmethod
    def from_pairs(cls, re, im):
        z = np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)
        order = np.lexsort((-z.imag, -z.real))
        return cls(z[order])

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def max_real(self):
        return float(np.max(self.values.real)) if len(self.values) else -math.inf

    def real_values(self, rel_tol=1e-7):
        """Values whose imaginary part is within ``rel_tol * (1 + |re|)``."""
        z = self.values
        mask = np.abs(z.imag) <= rel_tol * (1.0 + np.abs(z.real))
        return np.sort(z.real[mask])

    def as_pairs(self):
        return [[float(v.real), float(v.imag)] for v in self.values]


def balance(A):
    """Diagonal similarity scaling by powers of two; returns (B, d) with B = D^-1 A D."""
    B = np.array(A, dtype=float)
    n = B.shape[0]
    d = np.ones(n)
    sqrdx = RADIX * RADIX
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(B[:, i])) - abs(B[i, i])
            r = np.sum(np.abs(B[i, :])) - abs(B[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / RADIX
            f = 1.0
            s = c + r
            while c < g:
                f *= RADIX
                c *= sqrdx
            g = r * RADIX
            while c > g:
                f /= RADIX
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                g = 1.0 / f
                d[i] *= f
                B[i, :] *= g
                B[:, i] *= f
    return B, d


def hessenberg(A):
    """Reduce to upper Hessenberg form with Householder reflections."""
    H = np.array(A, dtype=float)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k]
        s = np.max(np.abs(x))
        if s == 0.0:
            continue
        # work with x / s so tiny or huge columns neither underflow nor overflow
        v = x / s
        v[0] += math.copysign(math.sqrt(v @ v), v[0])
        v /= math.sqrt(v @ v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v)
        H[k + 2:, k] = 0.0
    return H


def hqr(H, max_its=120):
    """Eigenvalues of an upper Hessenberg matrix; returns (wr, wi)."""
    n = H.shape[0]
    # 1-based copy keeps the index arithmetic identical to the classic routine
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = H
    wr = np.zeros(n + 1)
    wi = np.zeros(n + 1)
    anorm = 0.0
    for i in range(1, n + 1):
        for j in range(max(i - 1, 1), n + 1):
            anorm += abs(a[i, j])
    nn = n
    t = 0.0
    while nn >= 1:
        its = 0
        while True:
            l = 1
            for ll in range(nn, 1, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) + s == s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if its == max_its:
                raise NumericFailure(
                    "hqr: too many iterations",
                    partial=(wr[nn + 1:].copy(), wi[nn + 1:].copy()),
                )
            if its % 10 == 0 and its > 0:
                # exceptional shift, alternating between the bottom and the top
                # of the active block to break cycles (e.g. eigenvalues +-z)
                t += x
                for i in range(1, nn + 1):
                    a[i, i] -= x
                if its % 20 == 10 or l + 2 > nn:
                    s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                else:
                    s = abs(a[l + 1, l]) + abs(a[l + 2, l + 1])
                y = x = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u + v == v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k != nn - 1 else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k != nn - 1:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                mmin = min(nn, k + 3)
                for i in range(l, mmin + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k != nn - 1:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
            if l >= nn - 1:
                break
    return wr[1:], wi[1:]


def eigenvalues(M, balanced=True, max_its=120):
    """All eigenvalues of a real square matrix as a :class:`Spectrum`."""
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError("eigenvalues: need a non-empty square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("eigenvalues: non-finite entries")
    if A.shape[0] == 1:
        return Spectrum.from_pairs([A[0, 0]], [0.0])
    if balanced:
        A, _ = balance(A)
    wr, wi = hqr(hessenberg(A), max_its=max_its)
    return Spectrum.from_pairs(wr, wi)
