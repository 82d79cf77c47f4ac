"""Exact arithmetic in the Novikov field and matrices over it.

Elements are finite sums ``sum c_r T^r`` with rational exponents and
rational coefficients.  A scalar may carry a *cutoff* ``C``: its stored
coefficients are exact for every exponent ``<= C`` and nothing is known
above ``C``.  Scalars without a cutoff are exact elements of finite support.

All values are immutable; every operation returns a new object.
"""

from __future__ import annotations

import json
from fractions import Fraction
from functools import reduce
from math import floor, lcm
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import (
    InsufficientPrecision,
    NonSquare,
    ShapeMismatch,
    SingularMatrix,
    ZeroInversion,
)

Rational = Union[int, Fraction, str]

__all__ = [
    "NovikovScalar",
    "NovikovMatrix",
    "Lemma22Report",
    "to_fraction",
    "format_fraction",
    "nov_add",
    "nov_mul",
    "nov_valuation",
    "nov_invert",
    "mat_det",
    "mat_lemma22_check",
    "mat_invert",
]


def to_fraction(value: Rational) -> Fraction:
    """Parse ``int``, ``Fraction`` or a ``"p/q"`` string (unicode minus allowed)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip().replace("−", "-"))
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def format_fraction(value: Fraction) -> str:
    """Lowest-terms ``p/q`` text, or ``p`` for integers."""
    return str(Fraction(value))


def _cut_min(a: Fraction | None, b: Fraction | None) -> Fraction | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class NovikovScalar:
    """An element of the Novikov field, possibly truncated above a cutoff."""

    __slots__ = ("_terms", "_cutoff")

    def __init__(
        self,
        terms: Mapping[Rational, Rational] | Iterable[tuple[Rational, Rational]] | None = None,
        cutoff: Rational | None = None,
    ):
        cut = None if cutoff is None else to_fraction(cutoff)
        acc: dict[Fraction, Fraction] = {}
        if terms is not None:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for exp, coeff in items:
                e = to_fraction(exp)
                if cut is not None and e > cut:
                    continue
                acc[e] = acc.get(e, Fraction(0)) + to_fraction(coeff)
        self._terms: tuple[tuple[Fraction, Fraction], ...] = tuple(
            sorted((e, c) for e, c in acc.items() if c != 0)
        )
        self._cutoff = cut

    @classmethod
    def _raw(cls, terms: dict[Fraction, Fraction], cutoff: Fraction | None) -> "NovikovScalar":
        # terms already Fractions, caller guarantees exponents <= cutoff
        obj = cls.__new__(cls)
        obj._terms = tuple(sorted((e, c) for e, c in terms.items() if c != 0))
        obj._cutoff = cutoff
        return obj

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, cutoff: Rational | None = None) -> "NovikovScalar":
        return cls(None, cutoff)

    @classmethod
    def one(cls) -> "NovikovScalar":
        return cls({0: 1})

    @classmethod
    def constant(cls, value: Rational, cutoff: Rational | None = None) -> "NovikovScalar":
        return cls({0: value}, cutoff)

    @classmethod
    def monomial(cls, coeff: Rational, exp: Rational = 0, cutoff: Rational | None = None) -> "NovikovScalar":
        return cls({exp: coeff}, cutoff)

    @classmethod
    def coerce(cls, value: "NovikovScalar | Rational") -> "NovikovScalar":
        if isinstance(value, NovikovScalar):
            return value
        return cls.constant(value)

    # -- accessors --------------------------------------------------------
    @property
    def terms(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """``(exponent, coefficient)`` pairs in increasing exponent order."""
        return self._terms

    @property
    def cutoff(self) -> Fraction | None:
        return self._cutoff

    @property
    def is_exact(self) -> bool:
        return self._cutoff is None

    def coeff(self, exp: Rational) -> Fraction:
        e = to_fraction(exp)
        if self._cutoff is not None and e > self._cutoff:
            raise InsufficientPrecision(f"coefficient at T^{e} lies above cutoff {self._cutoff}")
        for ee, c in self._terms:
            if ee == e:
                return c
        return Fraction(0)

    def valuation(self) -> Fraction | None:
        return self._terms[0][0] if self._terms else None

    def leading(self) -> tuple[Fraction, Fraction] | None:
        return self._terms[0] if self._terms else None

    def is_zero(self) -> bool:
        """True only for the exact zero element."""
        return not self._terms and self._cutoff is None

    def is_zero_upto(self, cutoff: Rational | None = None) -> bool:
        """No stored term at exponent ``<= cutoff`` (all terms if ``cutoff`` is None)."""
        if cutoff is None:
            return not self._terms
        c = to_fraction(cutoff)
        return all(e > c for e, _ in self._terms)

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def is_rational(self) -> bool:
        """Exact element of Q (only a constant term)."""
        return self._cutoff is None and all(e == 0 for e, _ in self._terms)

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not an exact rational constant")
        return self._terms[0][1] if self._terms else Fraction(0)

    def _lower_valuation(self) -> Fraction | None:
        """Lower bound for the true valuation; None encodes +infinity."""
        if self._terms:
            return self._terms[0][0]
        return self._cutoff

    def truncate(self, cutoff: Rational) -> "NovikovScalar":
        c = _cut_min(self._cutoff, to_fraction(cutoff))
        return NovikovScalar._raw({e: v for e, v in self._terms if e <= c}, c)

    def agrees_upto(self, other: "NovikovScalar | Rational", cutoff: Rational) -> bool:
        """Same coefficients at every exponent ``<= cutoff``.

        Raises InsufficientPrecision when either side is not known that far.
        """
        other = NovikovScalar.coerce(other)
        c = to_fraction(cutoff)
        for s in (self, other):
            if s._cutoff is not None and s._cutoff < c:
                raise InsufficientPrecision(f"{s} is only known up to T^{s._cutoff}")
        return (self - other).is_zero_upto(c)

    # -- arithmetic -------------------------------------------------------
    def __neg__(self) -> "NovikovScalar":
        return NovikovScalar._raw({e: -c for e, c in self._terms}, self._cutoff)

    def __add__(self, other) -> "NovikovScalar":
        if not isinstance(other, NovikovScalar):
            try:
                other = NovikovScalar.constant(other)
            except TypeError:
                return NotImplemented
        return nov_add(self, other)

    __radd__ = __add__

    def __sub__(self, other) -> "NovikovScalar":
        if not isinstance(other, NovikovScalar):
            try:
                other = NovikovScalar.constant(other)
            except TypeError:
                return NotImplemented
        return nov_add(self, -other)

    def __rsub__(self, other) -> "NovikovScalar":
        return NovikovScalar.coerce(other) - self

    def __mul__(self, other) -> "NovikovScalar":
        if not isinstance(other, NovikovScalar):
            try:
                k = to_fraction(other)
            except TypeError:
                return NotImplemented
            if k == 0:
                # an exact rational zero annihilates the unknown tail as well
                return NovikovScalar.zero()
            return NovikovScalar._raw({e: c * k for e, c in self._terms}, self._cutoff)
        return nov_mul(self, other)

    __rmul__ = __mul__

    def inverse(self, cutoff: Rational) -> "NovikovScalar":
        return nov_invert(self, cutoff)

    def shift(self, exp: Rational) -> "NovikovScalar":
        """Multiply by ``T^exp``."""
        s = to_fraction(exp)
        cut = None if self._cutoff is None else self._cutoff + s
        return NovikovScalar._raw({e + s: c for e, c in self._terms}, cut)

    # -- comparison / display ---------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, NovikovScalar):
            try:
                other = NovikovScalar.constant(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms and self._cutoff == other._cutoff

    def __hash__(self) -> int:
        return hash((self._terms, self._cutoff))

    def __repr__(self) -> str:
        return f"NovikovScalar({self})"

    def __str__(self) -> str:
        parts = []
        for e, c in self._terms:
            if e == 0:
                parts.append(str(c))
            else:
                parts.append(f"{c}*T^{e}")
        body = " + ".join(parts) if parts else "0"
        if self._cutoff is not None:
            body += f" + O(T^>{self._cutoff})"
        return body

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        doc: dict = {
            "terms": [{"exp": format_fraction(e), "coeff": format_fraction(c)} for e, c in self._terms]
        }
        if self._cutoff is not None:
            doc["cutoff"] = format_fraction(self._cutoff)
        return doc

    @classmethod
    def from_json(cls, doc) -> "NovikovScalar":
        """Accept the record document, a bare record list, or a rational."""
        if isinstance(doc, (int, str, Fraction)) and not isinstance(doc, bool):
            return cls.constant(doc)
        if isinstance(doc, list):
            return cls([(t["exp"], t["coeff"]) for t in doc])
        if isinstance(doc, dict):
            terms = [(t["exp"], t["coeff"]) for t in doc.get("terms", [])]
            return cls(terms, doc.get("cutoff"))
        raise ValueError(f"not a Novikov scalar document: {doc!r}")

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def nov_add(a: NovikovScalar, b: NovikovScalar) -> NovikovScalar:
    cut = _cut_min(a._cutoff, b._cutoff)
    acc: dict[Fraction, Fraction] = {}
    for e, c in a._terms:
        if cut is None or e <= cut:
            acc[e] = c
    for e, c in b._terms:
        if cut is None or e <= cut:
            acc[e] = acc.get(e, Fraction(0)) + c
    return NovikovScalar._raw(acc, cut)


def nov_mul(a: NovikovScalar, b: NovikovScalar) -> NovikovScalar:
    """Cauchy product; the result is exact up to ``min(Ca + v(b), Cb + v(a))``."""
    if a.is_zero() or b.is_zero():
        return NovikovScalar.zero()
    cut: Fraction | None = None
    va, vb = a._lower_valuation(), b._lower_valuation()
    if a._cutoff is not None:
        cut = _cut_min(cut, a._cutoff + vb)
    if b._cutoff is not None:
        cut = _cut_min(cut, b._cutoff + va)
    acc: dict[Fraction, Fraction] = {}
    for ea, ca in a._terms:
        for eb, cb in b._terms:
            e = ea + eb
            if cut is not None and e > cut:
                break  # b terms are sorted
            acc[e] = acc.get(e, Fraction(0)) + ca * cb
    return NovikovScalar._raw(acc, cut)


def nov_valuation(a: NovikovScalar) -> Fraction | None:
    return a.valuation()


def nov_invert(a: NovikovScalar, cutoff: Rational) -> NovikovScalar:
    """Inverse of ``a`` known through exponent ``cutoff``.

    Writes ``a = c T^v (1 + u)`` with ``u`` of positive valuation and sums
    the geometric series on the exponent lattice of ``u``.  Exact monomials
    invert exactly.
    """
    C = to_fraction(cutoff)
    if not a._terms:
        if a._cutoff is None:
            raise ZeroInversion("cannot invert the zero element")
        raise InsufficientPrecision(f"{a} is zero up to its cutoff; inverse undetermined")
    v, c0 = a._terms[0]
    if a._cutoff is None and len(a._terms) == 1:
        return NovikovScalar._raw({-v: 1 / c0}, None)
    if a._cutoff is not None and C > a._cutoff - 2 * v:
        raise InsufficientPrecision(
            f"inverse through T^{C} needs the input through T^{C + 2 * v}, but it is cut at T^{a._cutoff}"
        )
    span = C + v  # needed precision of 1/(1+u)
    if span < 0:
        return NovikovScalar._raw({}, C)
    u = [(e - v, c / c0) for e, c in a._terms[1:] if e - v <= span]
    denom = reduce(lcm, (e.denominator for e, _ in u), 1)
    steps = [(int(e * denom), c) for e, c in u]
    n = floor(span * denom)
    series = [Fraction(0)] * (n + 1)
    series[0] = Fraction(1)
    for m in range(1, n + 1):
        acc = Fraction(0)
        for k, c in steps:
            if k > m:
                break
            if series[m - k]:
                acc -= c * series[m - k]
        series[m] = acc
    inv_c0 = 1 / c0
    terms = {Fraction(m, denom) - v: s * inv_c0 for m, s in enumerate(series) if s}
    return NovikovScalar._raw(terms, C)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


class NovikovMatrix:
    """Dense ``rows x cols`` grid of Novikov scalars.

    Either every entry is exact or every entry carries the same (minimal)
    cutoff; mixed input is truncated on construction.
    """

    __slots__ = ("_rows", "_cols", "_entries")

    def __init__(self, entries: Sequence[Sequence["NovikovScalar | Rational"]], cols: int | None = None):
        rows = [[NovikovScalar.coerce(x) for x in row] for row in entries]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ShapeMismatch("ragged matrix rows")
        cut = None
        for row in rows:
            for x in row:
                cut = _cut_min(cut, x.cutoff)
        if cut is not None:
            rows = [[x.truncate(cut) for x in row] for row in rows]
        self._rows = len(rows)
        self._cols = cols
        self._entries = tuple(tuple(r) for r in rows)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "NovikovMatrix":
        z = NovikovScalar.zero()
        return cls([[z] * cols for _ in range(rows)], cols)

    @classmethod
    def identity(cls, n: int) -> "NovikovMatrix":
        one, z = NovikovScalar.one(), NovikovScalar.zero()
        return cls([[one if i == j else z for j in range(n)] for i in range(n)], n)

    @classmethod
    def diagonal(cls, values: Sequence["NovikovScalar | Rational"]) -> "NovikovMatrix":
        n = len(values)
        z = NovikovScalar.zero()
        return cls([[NovikovScalar.coerce(values[i]) if i == j else z for j in range(n)] for i in range(n)], n)

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self._rows, self._cols)

    @property
    def entries(self) -> tuple[tuple[NovikovScalar, ...], ...]:
        return self._entries

    @property
    def cutoff(self) -> Fraction | None:
        for row in self._entries:
            for x in row:
                return x.cutoff
        return None

    @property
    def is_exact(self) -> bool:
        return self.cutoff is None

    def __getitem__(self, ij: tuple[int, int]) -> NovikovScalar:
        i, j = ij
        return self._entries[i][j]

    def __iter__(self) -> Iterator[tuple[NovikovScalar, ...]]:
        return iter(self._entries)

    def row(self, i: int) -> tuple[NovikovScalar, ...]:
        return self._entries[i]

    def column(self, j: int) -> tuple[NovikovScalar, ...]:
        return tuple(r[j] for r in self._entries)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "NovikovMatrix":
        return NovikovMatrix([[self._entries[i][j] for j in cols] for i in rows], len(cols))

    def hstack(self, other: "NovikovMatrix") -> "NovikovMatrix":
        if self._rows != other._rows:
            raise ShapeMismatch(f"cannot stack {self.shape} beside {other.shape}")
        return NovikovMatrix([list(a) + list(b) for a, b in zip(self._entries, other._entries)], self._cols + other._cols)

    def transpose(self) -> "NovikovMatrix":
        return NovikovMatrix([list(self.column(j)) for j in range(self._cols)], self._rows)

    def truncate(self, cutoff: Rational) -> "NovikovMatrix":
        return NovikovMatrix([[x.truncate(cutoff) for x in r] for r in self._entries], self._cols)

    def map(self, fn) -> "NovikovMatrix":
        return NovikovMatrix([[fn(x) for x in r] for r in self._entries], self._cols)

    def __add__(self, other: "NovikovMatrix") -> "NovikovMatrix":
        if self.shape != other.shape:
            raise ShapeMismatch(f"cannot add {self.shape} and {other.shape}")
        return NovikovMatrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self._entries, other._entries)], self._cols
        )

    def __neg__(self) -> "NovikovMatrix":
        return self.map(lambda x: -x)

    def __sub__(self, other: "NovikovMatrix") -> "NovikovMatrix":
        return self + (-other)

    def scale(self, k: "NovikovScalar | Rational") -> "NovikovMatrix":
        k = NovikovScalar.coerce(k)
        return self.map(lambda x: k * x)

    def __matmul__(self, other: "NovikovMatrix") -> "NovikovMatrix":
        if self._cols != other._rows:
            raise ShapeMismatch(f"cannot multiply {self.shape} by {other.shape}")
        z = NovikovScalar.zero()
        out = []
        for i in range(self._rows):
            row = []
            for j in range(other._cols):
                acc = z
                for k in range(self._cols):
                    a, b = self._entries[i][k], other._entries[k][j]
                    if a.is_zero() or b.is_zero():
                        continue
                    acc = acc + a * b
                row.append(acc)
            out.append(row)
        return NovikovMatrix(out, other._cols)

    def apply(self, vector: Sequence["NovikovScalar | Rational"]) -> list[NovikovScalar]:
        col = NovikovMatrix([[x] for x in vector], 1)
        return list((self @ col).column(0))

    def is_zero_upto(self, cutoff: Rational | None = None) -> bool:
        return all(x.is_zero_upto(cutoff) for r in self._entries for x in r)

    def nonzero_entries(self, cutoff: Rational | None = None) -> list[tuple[int, int, NovikovScalar]]:
        return [
            (i, j, x)
            for i, r in enumerate(self._entries)
            for j, x in enumerate(r)
            if not x.is_zero_upto(cutoff)
        ]

    def agrees_upto(self, other: "NovikovMatrix", cutoff: Rational) -> bool:
        if self.shape != other.shape:
            return False
        return all(
            a.agrees_upto(b, cutoff) for ra, rb in zip(self._entries, other._entries) for a, b in zip(ra, rb)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, NovikovMatrix):
            return NotImplemented
        return self.shape == other.shape and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        body = "; ".join(", ".join(str(x) for x in r) for r in self._entries)
        return f"NovikovMatrix([{body}])"

    def to_json(self) -> list[list[dict]]:
        return [[x.to_json() for x in r] for r in self._entries]

    @classmethod
    def from_json(cls, doc) -> "NovikovMatrix":
        if isinstance(doc, dict):
            doc = doc["matrix"]
        rows = [[NovikovScalar.from_json(x) for x in r] for r in doc]
        return cls(rows, len(rows[0]) if rows else 0)


def _require_square(m: NovikovMatrix) -> int:
    if m.rows != m.cols:
        raise NonSquare(f"expected a square matrix, got {m.rows}x{m.cols}")
    return m.rows


def mat_det(m: NovikovMatrix) -> NovikovScalar:
    """Determinant by cofactor expansion along rows, memoised over column subsets."""
    n = _require_square(m)
    if n == 0:
        return NovikovScalar.one()
    e = m.entries
    memo: dict[int, NovikovScalar] = {}

    def minor(mask: int) -> NovikovScalar:
        # determinant of rows [n - popcount(mask), n) restricted to columns in mask
        if mask == 0:
            return NovikovScalar.one()
        hit = memo.get(mask)
        if hit is not None:
            return hit
        k = n - bin(mask).count("1")
        acc = NovikovScalar.zero()
        sign = 1
        for j in range(n):
            bit = 1 << j
            if not mask & bit:
                continue
            a = e[k][j]
            if not a.is_zero():
                term = a * minor(mask & ~bit)
                acc = acc + term if sign > 0 else acc - term
            sign = -sign
        memo[mask] = acc
        return acc

    return minor((1 << n) - 1)


class Lemma22Report:
    """Outcome of the triangular-invertibility hypotheses check.

    ``violations`` holds ``(i, j, r, reason)`` tuples.
    """

    __slots__ = ("holds", "violations")

    def __init__(self, violations: list[tuple[int, int, Fraction, str]]):
        self.violations = violations
        self.holds = not violations

    def __bool__(self) -> bool:
        return self.holds

    def __repr__(self) -> str:
        return f"Lemma22Report(holds={self.holds}, violations={self.violations})"

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "violations": [
                {"i": i, "j": j, "exp": format_fraction(r), "reason": why} for i, j, r, why in self.violations
            ],
        }


def mat_lemma22_check(m: NovikovMatrix) -> Lemma22Report:
    """No negative exponents, zero off-diagonal and nonzero diagonal constant terms."""
    n = _require_square(m)
    bad: list[tuple[int, int, Fraction, str]] = []
    zero = Fraction(0)
    for i in range(n):
        for j in range(n):
            x = m[i, j]
            for r, _ in x.terms:
                if r < 0:
                    bad.append((i, j, r, "negative exponent"))
            if x.cutoff is not None and x.cutoff < 0:
                bad.append((i, j, x.cutoff, "constant term undetermined"))
                continue
            c0 = x.coeff(0)
            if i != j and c0 != 0:
                bad.append((i, j, zero, "off-diagonal constant term"))
            if i == j and c0 == 0:
                bad.append((i, j, zero, "zero diagonal constant term"))
    return Lemma22Report(bad)


def _pick_pivot(col: list[NovikovScalar]) -> int | None:
    best, best_v = None, None
    for i, x in enumerate(col):
        v = x.valuation()
        if v is not None and (best_v is None or v < best_v):
            best, best_v = i, v
    return best


def _gauss_jordan(m: NovikovMatrix, work: Fraction) -> list[list[NovikovScalar]]:
    n = m.rows
    a = [list(r) for r in m.entries]
    inv = [list(r) for r in NovikovMatrix.identity(n).entries]
    for k in range(n):
        rel = _pick_pivot([a[i][k] for i in range(k, n)])
        if rel is None:
            if all(a[i][k].is_zero() for i in range(k, n)):
                raise SingularMatrix(f"column {k} has no pivot")
            raise InsufficientPrecision(f"pivot in column {k} undetermined at working cutoff {work}")
        p = k + rel
        if p != k:
            a[k], a[p] = a[p], a[k]
            inv[k], inv[p] = inv[p], inv[k]
        pinv = nov_invert(a[k][k], work)
        a[k] = [pinv * x for x in a[k]]
        inv[k] = [pinv * x for x in inv[k]]
        for i in range(n):
            if i == k or a[i][k].is_zero():
                continue
            f = a[i][k]
            a[i] = [x - f * y for x, y in zip(a[i], a[k])]
            inv[i] = [x - f * y for x, y in zip(inv[i], inv[k])]
    return inv


def mat_invert(m: NovikovMatrix, cutoff: Rational, max_rounds: int = 8) -> NovikovMatrix:
    """Inverse through exponent ``cutoff`` by Gauss-Jordan elimination.

    Pivots are the minimal-valuation entries of each column (lowest row on
    ties).  Working precision is raised until every entry of the result is
    known through ``cutoff``.
    """
    n = _require_square(m)
    C = to_fraction(cutoff)
    det = mat_det(m)
    if det.is_zero():
        raise SingularMatrix("determinant is exactly zero")
    if not det.terms:
        raise InsufficientPrecision(f"determinant vanishes up to T^{det.cutoff}")
    work = C
    vals = [x.valuation() for r in m.entries for x in r if x.terms]
    spread = (max(vals) - min(vals)) if vals else Fraction(0)
    for _ in range(max_rounds):
        try:
            inv = _gauss_jordan(m, work)
        except InsufficientPrecision:
            if m.is_exact:
                work = work + spread + 1
                continue
            raise
        reached = None
        for row in inv:
            for x in row:
                reached = _cut_min(reached, x.cutoff)
        if reached is None or reached >= C:
            out = NovikovMatrix(inv, n)
            return out if out.is_exact else out.truncate(C)
        if not m.is_exact and work >= m.cutoff:
            break
        work = work + (C - reached) + spread + 1
        if not m.is_exact:
            work = min(work, m.cutoff)
    raise InsufficientPrecision(f"could not reach T^{C} within the available precision")
