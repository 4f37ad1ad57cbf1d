"""Exact Gaussian-rational linear algebra.

Everything here works over Q(i): a ``Scalar`` is a pair of ``Fraction``s and an
``Operator`` is an immutable square matrix of them.  There is no floating point
anywhere, so lattice comparisons (P <= Q, A <=_s B) are exact equalities.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, isqrt
from typing import Iterable, Sequence

from .errors import (
    DimensionMismatch,
    InvalidHint,
    IrrationalSpectrum,
    NotDensity,
    NotHermitian,
    NotIdempotent,
    NotNormalized,
    NotUnitary,
)

_ZERO = Fraction(0)
_ONE = Fraction(1)


class Scalar:
    """A Gaussian rational re + i*im."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "Scalar":
        s = cls.__new__(cls)
        s.re = re
        s.im = im
        return s

    def __add__(self, other):
        o = scalar(other)
        return Scalar._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = scalar(other)
        return Scalar._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return scalar(other) - self

    def __mul__(self, other):
        o = scalar(other)
        if not self.im and not o.im:
            return Scalar._raw(self.re * o.re, _ZERO)
        return Scalar._raw(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = scalar(other)
        den = o.re * o.re + o.im * o.im
        if not den:
            raise ZeroDivisionError("division by zero scalar")
        num = self * o.conj()
        return Scalar._raw(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return scalar(other) / self

    def __neg__(self):
        return Scalar._raw(-self.re, -self.im)

    def conj(self) -> "Scalar":
        return Scalar._raw(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return not self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def key(self):
        return (self.re, self.im)

    def __repr__(self):
        if not self.im:
            return f"Scalar({self.re})"
        return f"Scalar({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def to_json(self):
        if not self.im:
            return str(self.re)
        return {"re": str(self.re), "im": str(self.im)}


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"expected an exact rational, got {type(x).__name__}: {x!r}")


def scalar(x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, dict):
        return Scalar(x.get("re", 0), x.get("im", 0))
    return Scalar._raw(_frac(x), _ZERO)


S0 = Scalar()
S1 = Scalar(1)


# ---------------------------------------------------------------- vectors

Vector = tuple  # tuple of Scalar


def ket(values: Iterable) -> Vector:
    return tuple(scalar(v) for v in values)


def inner(u: Vector, v: Vector) -> Scalar:
    """<u|v>, antilinear in u."""
    if len(u) != len(v):
        raise DimensionMismatch("vector lengths differ", left=len(u), right=len(v))
    acc = S0
    for a, b in zip(u, v):
        acc = acc + a.conj() * b
    return acc


def is_unit(v: Vector) -> bool:
    return inner(v, v) == 1


def require_unit(v: Vector) -> None:
    n = inner(v, v)
    if n != 1:
        raise NotNormalized("state is not a unit vector", norm_squared=n)


# ---------------------------------------------------------------- operators

class Operator:
    """Immutable dim x dim matrix over Q(i).

    ``kind`` is a validated tag (general, hermitian, projector, density,
    rank-one).  ``resolution`` may hold an attached SpectralResolution and
    ``decomposition`` the convex mixture that certifies a density matrix.
    Equality and hashing look only at the entries.
    """

    __slots__ = ("entries", "kind", "resolution", "decomposition", "_key", "_hash")

    def __init__(self, entries, kind="general", resolution=None, decomposition=None):
        self.entries = entries
        self.kind = kind
        self.resolution = resolution
        self.decomposition = decomposition
        self._key = None
        self._hash = None

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def key(self) -> tuple:
        """Row-major sequence of (re, im) pairs; the canonical ordering key."""
        if self._key is None:
            self._key = tuple(x.key() for row in self.entries for x in row)
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self):
        rows = "; ".join(" ".join(str(x) for x in row) for row in self.entries)
        return f"Operator<{self.kind}>[{rows}]"

    def _check(self, other):
        if other.dim != self.dim:
            raise DimensionMismatch("operator dimensions differ", left=self.dim, right=other.dim)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def __neg__(self):
        return Operator(tuple(tuple(-a for a in r) for r in self.entries))

    def scale(self, c) -> "Operator":
        c = scalar(c)
        return Operator(tuple(tuple(c * a for a in r) for r in self.entries))

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        n = self.dim
        cols = tuple(tuple(other.entries[k][j] for k in range(n)) for j in range(n))
        out = []
        for row in self.entries:
            new = []
            for col in cols:
                acc = S0
                for a, b in zip(row, col):
                    if a and b:
                        acc = acc + a * b
                new.append(acc)
            out.append(tuple(new))
        return Operator(tuple(out))

    def apply(self, v: Vector) -> Vector:
        if len(v) != self.dim:
            raise DimensionMismatch("vector length differs from operator dim", dim=self.dim, length=len(v))
        out = []
        for row in self.entries:
            acc = S0
            for a, b in zip(row, v):
                if a and b:
                    acc = acc + a * b
            out.append(acc)
        return tuple(out)

    def adjoint(self) -> "Operator":
        n = self.dim
        return Operator(tuple(tuple(self.entries[j][i].conj() for j in range(n)) for i in range(n)))

    def trace(self) -> Scalar:
        acc = S0
        for i in range(self.dim):
            acc = acc + self.entries[i][i]
        return acc

    def is_zero(self) -> bool:
        return not any(x for row in self.entries for x in row)

    def is_diagonal(self) -> bool:
        return all(not x for i, row in enumerate(self.entries) for j, x in enumerate(row) if i != j)

    def diagonal(self) -> tuple:
        return tuple(self.entries[i][i] for i in range(self.dim))

    def first_non_hermitian(self):
        n = self.dim
        for i in range(n):
            for j in range(i, n):
                if self.entries[i][j] != self.entries[j][i].conj():
                    return (i, j)
        return None

    def is_hermitian(self) -> bool:
        return self.first_non_hermitian() is None

    def is_projector(self) -> bool:
        return self.is_hermitian() and self @ self == self

    def with_kind(self, kind) -> "Operator":
        op = Operator(self.entries, kind, self.resolution, self.decomposition)
        op._key, op._hash = self._key, self._hash
        return op

    def with_resolution(self, res) -> "Operator":
        op = Operator(self.entries, self.kind, res, self.decomposition)
        op._key, op._hash = self._key, self._hash
        return op

    def to_json(self):
        return [[x.to_json() for x in row] for row in self.entries]


def matrix(rows: Sequence[Sequence]) -> Operator:
    rows = [list(r) for r in rows]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise DimensionMismatch("matrix must be square and non-empty", rows=n)
    return Operator(tuple(tuple(scalar(x) for x in r) for r in rows))


def _as_operator(m) -> Operator:
    return m if isinstance(m, Operator) else matrix(m)


def identity(n: int) -> Operator:
    return Operator(tuple(tuple(S1 if i == j else S0 for j in range(n)) for i in range(n)), "projector")


def zero(n: int) -> Operator:
    return Operator(tuple(tuple(S0 for _ in range(n)) for _ in range(n)), "projector")


def diag(*values) -> Operator:
    n = len(values)
    vals = [scalar(v) for v in values]
    return Operator(tuple(tuple(vals[i] if i == j else S0 for j in range(n)) for i in range(n)))


def basis_projector(n: int, i: int) -> Operator:
    """|e_i><e_i| in dimension n (0-based i)."""
    return Operator(tuple(tuple(S1 if (r == c == i) else S0 for c in range(n)) for r in range(n)), "projector")


def outer(u: Vector, v: Vector) -> Operator:
    """|u><v|."""
    return Operator(tuple(tuple(a * b.conj() for b in v) for a in u))


def hermitian(m) -> Operator:
    op = _as_operator(m)
    bad = op.first_non_hermitian()
    if bad is not None:
        i, j = bad
        raise NotHermitian("matrix is not Hermitian", entry=f"({i},{j})", value=op[i, j], mirror=op[j, i])
    return op.with_kind("hermitian")


def make_projector(m) -> Operator:
    """Validate a square grid as an orthogonal projector (P = P* = P^2)."""
    op = _as_operator(m)
    bad = op.first_non_hermitian()
    if bad is not None:
        i, j = bad
        raise NotHermitian("matrix is not Hermitian", entry=f"({i},{j})", value=op[i, j], mirror=op[j, i])
    sq = op @ op
    for i in range(op.dim):
        for j in range(op.dim):
            if sq[i, j] != op[i, j]:
                raise NotIdempotent("P^2 != P", entry=f"({i},{j})", square=sq[i, j], value=op[i, j])
    return op.with_kind("projector")


def rank_one(psi: Vector) -> Operator:
    """|psi><psi| for a unit vector."""
    require_unit(psi)
    return outer(psi, psi).with_kind("projector")


def ray_projector(v: Vector) -> Operator:
    """Projector onto the line through a nonzero (not necessarily unit) vector."""
    n2 = inner(v, v)
    if not n2:
        raise NotNormalized("zero vector has no ray")
    inv = S1 / n2
    return outer(v, v).scale(inv).with_kind("projector")


def is_unitary(u: Operator) -> bool:
    return u.adjoint() @ u == identity(u.dim)


def require_unitary(u: Operator) -> Operator:
    if not is_unitary(u):
        raise NotUnitary("U*U != 1")
    return u


def conjugate(u: Operator, a: Operator) -> Operator:
    """U A U*; preserves the kind tag."""
    return (u @ a @ u.adjoint()).with_kind(a.kind)


def trace_product(a: Operator, b: Operator) -> Scalar:
    """tr(AB) without forming AB."""
    n = a.dim
    acc = S0
    for i in range(n):
        ra = a.entries[i]
        for j in range(n):
            x = ra[j]
            if x:
                y = b.entries[j][i]
                if y:
                    acc = acc + x * y
    return acc


def density(mixture: Sequence, matrix_=None) -> Operator:
    """rho = sum p_i |psi_i><psi_i| from a certified convex decomposition.

    ``mixture`` is a sequence of (weight, vector) pairs with positive rational
    weights summing to 1 and unit vectors.  If ``matrix_`` is supplied it must
    equal the decomposition exactly.
    """
    if not mixture:
        raise NotDensity("empty decomposition")
    items = []
    total = _ZERO
    dim = None
    acc = None
    for p, vec in mixture:
        p = _frac(p)
        if p <= 0:
            raise NotDensity("mixture weights must be positive", weight=p)
        vec = ket(vec)
        require_unit(vec)
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DimensionMismatch("mixture vectors differ in length")
        term = outer(vec, vec).scale(p)
        acc = term if acc is None else acc + term
        total += p
        items.append((p, vec))
    if total != 1:
        raise NotDensity("mixture weights must sum to 1", total=total)
    if matrix_ is not None:
        given = _as_operator(matrix_)
        if given != acc:
            raise NotDensity("matrix does not equal its declared decomposition")
    return Operator(acc.entries, "density", decomposition=tuple(items))


def expectation(state, a: Operator) -> Fraction:
    """<psi|A|psi> for a unit vector or tr(rho A) for a density; exact and real."""
    if isinstance(state, Operator):
        if state.dim != a.dim:
            raise DimensionMismatch("state and operator dims differ", left=state.dim, right=a.dim)
        if state.trace() != 1:
            raise NotNormalized("density trace is not 1", trace=state.trace())
        val = trace_product(state, a)
    else:
        psi = tuple(state)
        require_unit(psi)
        val = inner(psi, a.apply(psi))
    if val.im:
        raise NotHermitian("expectation value has an imaginary part", value=val)
    return val.re


# ---------------------------------------------------------------- order

def projector_leq(p: Operator, q: Operator) -> bool:
    """P <= Q in the projection lattice, i.e. PQ = P."""
    if p.dim != q.dim:
        raise DimensionMismatch("projector dims differ", left=p.dim, right=q.dim)
    return p @ q == p


def dominated(p: Operator, q: Operator) -> bool:
    """Fast P <= Q for projectors: tr(PQ) = tr(P).

    For projectors P(1-Q)P is positive with trace tr(P) - tr(PQ), so it
    vanishes exactly when PQ = P.
    """
    return trace_product(p, q) == p.trace()


def orthogonal(p: Operator, q: Operator) -> bool:
    """PQ = 0 for projectors, via tr(PQ) = 0."""
    return not trace_product(p, q)


# ---------------------------------------------------------------- spectra

class SpectralResolution:
    """Pairs (eigenvalue, eigenprojector) with strictly increasing eigenvalues."""

    __slots__ = ("pairs", "dim")

    def __init__(self, pairs):
        self.pairs = tuple((_frac(l), p) for l, p in pairs)
        self.dim = self.pairs[0][1].dim if self.pairs else 0

    @property
    def eigenvalues(self) -> tuple:
        return tuple(l for l, _ in self.pairs)

    def operator(self) -> Operator:
        acc = zero(self.dim)
        for l, p in self.pairs:
            acc = acc + p.scale(l)
        return acc

    def projector_on(self, values) -> Operator:
        """Sum of eigenprojectors whose eigenvalue passes the predicate or set."""
        pred = values if callable(values) else (lambda l: l in values)
        acc = zero(self.dim)
        for l, p in self.pairs:
            if pred(l):
                acc = acc + p
        return acc.with_kind("projector")

    def __eq__(self, other):
        return isinstance(other, SpectralResolution) and self.pairs == other.pairs

    def __hash__(self):
        return hash(self.pairs)

    def __repr__(self):
        return f"SpectralResolution({[(str(l), p) for l, p in self.pairs]})"


class SpectralFamily:
    """Right-continuous step family: E_lambda = sum of P_i with lambda_i <= lambda."""

    __slots__ = ("breakpoints", "dim")

    def __init__(self, breakpoints, dim):
        self.breakpoints = tuple(breakpoints)
        self.dim = dim

    def at(self, lam) -> Operator:
        lam = _frac(lam)
        cur = zero(self.dim)
        for l, e in self.breakpoints:
            if l <= lam:
                cur = e
            else:
                break
        return cur


def _validate_resolution(pairs, a: Operator | None, dim: int) -> SpectralResolution:
    if not pairs:
        raise InvalidHint("empty resolution")
    lams = [_frac(l) for l, _ in pairs]
    if any(x >= y for x, y in zip(lams, lams[1:])):
        raise InvalidHint("eigenvalues must be strictly increasing", eigenvalues=[str(l) for l in lams])
    projs = []
    for l, p in pairs:
        p = _as_operator(p)
        if p.dim != dim:
            raise InvalidHint("projector has wrong dimension", eigenvalue=l)
        if not p.is_projector():
            raise InvalidHint("hint entry is not a projector", eigenvalue=l)
        if p.is_zero():
            raise InvalidHint("zero eigenprojector", eigenvalue=l)
        projs.append(p.with_kind("projector"))
    for i in range(len(projs)):
        for j in range(i + 1, len(projs)):
            if not (projs[i] @ projs[j]).is_zero():
                raise InvalidHint("eigenprojectors are not orthogonal", first=lams[i], second=lams[j])
    total = reduce(lambda x, y: x + y, projs)
    if total != identity(dim):
        raise InvalidHint("eigenprojectors do not sum to the identity")
    res = SpectralResolution(zip(lams, projs))
    if a is not None and res.operator() != a:
        raise InvalidHint("sum of lambda_i P_i does not reconstruct the operator")
    return res


def char_poly(a: Operator) -> list:
    """Coefficients c_0..c_n of det(xI - A) via Faddeev-LeVerrier (exact)."""
    n = a.dim
    coeffs = [S0] * (n + 1)
    coeffs[n] = S1
    m = zero(n)
    eye = identity(n)
    for k in range(1, n + 1):
        m = a @ m + eye.scale(coeffs[n - k + 1])
        coeffs[n - k] = -(trace_product(a, m)) / k
    return coeffs


def _divisors(n: int) -> list:
    n = abs(n)
    out = set()
    for d in range(1, isqrt(n) + 1):
        if n % d == 0:
            out.add(d)
            out.add(n // d)
    return sorted(out)


def _eval(poly, x):
    acc = _ZERO
    for c in reversed(poly):
        acc = acc * x + c
    return acc


def _deflate(poly, r):
    """Divide by (x - r); poly is low-to-high and r must be a root."""
    n = len(poly) - 1
    out = [_ZERO] * n
    carry = _ZERO
    for i in range(n, 0, -1):
        carry = poly[i] + carry * r
        out[i - 1] = carry
    return out


def rational_roots(poly) -> list:
    """Rational roots with multiplicity of a real rational polynomial (low-to-high)."""
    poly = [_frac(c) for c in poly]
    while len(poly) > 1 and poly[-1] == 0:
        poly.pop()
    roots = []
    while len(poly) > 1 and poly[0] == 0:
        roots.append(_ZERO)
        poly = poly[1:]
    if len(poly) <= 1:
        return roots
    den = reduce(lambda x, y: x * y // gcd(x, y), (c.denominator for c in poly), 1)
    ints = [int(c * den) for c in poly]
    cands = set()
    for p in _divisors(ints[0]):
        for q in _divisors(ints[-1]):
            cands.add(Fraction(p, q))
            cands.add(Fraction(-p, q))
    for c in sorted(cands):
        while len(poly) > 1 and _eval(poly, c) == 0:
            roots.append(c)
            poly = _deflate(poly, c)
    return sorted(roots)


def spectral_resolution(a: Operator, hint=None) -> SpectralResolution:
    """Exact spectral resolution of a Hermitian operator.

    Without a hint the eigenvalues are the rational roots of the characteristic
    polynomial and the eigenprojectors come from Lagrange interpolation
    P_j = prod_{i != j} (A - l_i)/(l_j - l_i), which is exact for diagonalisable A.
    """
    a = _as_operator(a)
    bad = a.first_non_hermitian()
    if bad is not None:
        raise NotHermitian("operator is not Hermitian", entry=f"({bad[0]},{bad[1]})")
    n = a.dim
    if hint is not None:
        return _validate_resolution(list(hint), a, n)
    coeffs = char_poly(a)
    if any(c.im for c in coeffs):
        raise NotHermitian("characteristic polynomial is not real")
    roots = rational_roots([c.re for c in coeffs])
    if len(roots) < n:
        raise IrrationalSpectrum("spectrum is not rational; supply a resolution hint",
                                 rational_roots=len(roots), dim=n)
    lams = sorted(set(roots))
    eye = identity(n)
    pairs = []
    for j, lj in enumerate(lams):
        p = eye
        for i, li in enumerate(lams):
            if i != j:
                p = (p @ (a - eye.scale(li))).scale(S1 / (lj - li))
        pairs.append((lj, p))
    return _validate_resolution(pairs, a, n)


def resolved(a: Operator, hint=None) -> Operator:
    """Return A with its spectral resolution attached (computed if needed)."""
    if a.resolution is not None and hint is None:
        return a
    res = spectral_resolution(a, hint)
    kind = a.kind if a.kind in ("hermitian", "projector", "density") else "hermitian"
    return a.with_kind(kind).with_resolution(res)


def spectral_family(res: SpectralResolution) -> SpectralFamily:
    acc = zero(res.dim)
    bps = []
    for l, p in res.pairs:
        acc = (acc + p).with_kind("projector")
        bps.append((l, acc))
    return SpectralFamily(bps, res.dim)


def spectral_leq(a: Operator, b: Operator) -> bool:
    """A <=_s B iff E^A_l >= E^B_l at every breakpoint of either family."""
    if a.dim != b.dim:
        raise DimensionMismatch("operator dims differ", left=a.dim, right=b.dim)
    fa = spectral_family(resolved(a).resolution)
    fb = spectral_family(resolved(b).resolution)
    points = sorted({l for l, _ in fa.breakpoints} | {l for l, _ in fb.breakpoints})
    return all(dominated(fb.at(l), fa.at(l)) for l in points)


def spectrum(a: Operator) -> tuple:
    return resolved(a).resolution.eigenvalues
