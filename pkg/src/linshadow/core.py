"""Exact scalars, finitely supported sequences and p-norms.

Every scalar is an exact rational (``gmpy2.mpq``, which compares and hashes
like :class:`fractions.Fraction` and mixes freely with it).  Euclidean norms are never
materialized: comparisons use squared norms, and where a numeric value has to
be reported it is bracketed by rationals.
"""

from __future__ import annotations

import enum
import numbers
import re
from math import isqrt
from typing import Callable, Iterable, Mapping, Sequence

from gmpy2 import mpq

from .errors import DomainError, ParseError

Rational = mpq
_ZERO = mpq(0)

__all__ = [
    "Rational",
    "Domain",
    "NormKind",
    "Ordering",
    "SeqVector",
    "Norm",
    "parse_rational",
    "format_rational",
    "as_rational",
    "vec_combine",
    "norm_compare",
    "gauge",
    "sqrt_bounds",
]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text) -> Rational:
    """Parse ``"num/den"`` or an integer literal.  Decimals are rejected."""
    if isinstance(text, bool):
        raise ParseError(f"not a rational: {text!r}")
    if isinstance(text, numbers.Rational):
        return mpq(text)
    if not isinstance(text, str):
        raise ParseError(f"rationals must be given as 'num/den' strings, got {text!r}")
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ParseError(f"malformed rational {text!r}: expected 'num/den' (no decimals)")
    num, den = m.group(1), m.group(2)
    if den is not None and int(den) == 0:
        raise ParseError(f"zero denominator in {text!r}")
    return mpq(int(num), int(den) if den else 1)


def as_rational(x) -> Rational:
    """Coerce ints, rationals and rational strings; floats are refused."""
    if type(x) is mpq:
        return x
    if isinstance(x, float):
        raise ParseError(f"float {x!r} refused; use an exact rational")
    return parse_rational(x)


def format_rational(q: Rational) -> str:
    return f"{q.numerator}/{q.denominator}"


class Domain(enum.Enum):
    NATURALS = "N"
    INTEGERS = "Z"

    def admits(self, index: int) -> bool:
        return self is Domain.INTEGERS or index >= 0


class NormKind(enum.Enum):
    ONE = "1"
    TWO = "2"
    INF = "inf"

    @classmethod
    def parse(cls, text) -> "NormKind":
        if isinstance(text, NormKind):
            return text
        key = str(text).strip().lower()
        aliases = {"1": cls.ONE, "one": cls.ONE, "l1": cls.ONE,
                   "2": cls.TWO, "two": cls.TWO, "l2": cls.TWO,
                   "inf": cls.INF, "infinity": cls.INF, "linf": cls.INF}
        if key not in aliases:
            raise ParseError(f"unknown norm {text!r}")
        return aliases[key]

    @property
    def exponent(self) -> int:
        """Power of the norm carried by :func:`gauge`."""
        return 2 if self is NormKind.TWO else 1


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1

    @classmethod
    def of(cls, a, b) -> "Ordering":
        return cls.LESS if a < b else cls.GREATER if a > b else cls.EQUAL


class SeqVector:
    """Finitely supported sequence over ``N`` or ``Z`` with exact entries.

    Instances are immutable and never store zero entries.  Arithmetic with
    ``+``, ``-`` and scalar ``*`` / ``/`` is exact.
    """

    __slots__ = ("_domain", "_entries", "_hash")

    def __init__(self, entries: Mapping[int, object] | Iterable = (), domain: Domain = Domain.NATURALS):
        items = entries.items() if isinstance(entries, Mapping) else entries
        clean = {}
        for i, c in items:
            i = int(i)
            c = as_rational(c)
            if c:
                if not domain.admits(i):
                    raise DomainError(f"index {i} outside domain {domain.value}")
                clean[i] = clean.get(i, mpq(0)) + c
                if not clean[i]:
                    del clean[i]
        self._domain = domain
        self._entries = dict(sorted(clean.items()))
        self._hash = None

    @classmethod
    def _trusted(cls, entries: dict, domain: Domain) -> "SeqVector":
        # entries must already be nonzero Rationals on admissible indices
        self = object.__new__(cls)
        self._domain = domain
        self._entries = entries
        self._hash = None
        return self

    @classmethod
    def zero(cls, domain: Domain = Domain.NATURALS) -> "SeqVector":
        return cls._trusted({}, domain)

    @classmethod
    def basis(cls, i: int, domain: Domain = Domain.NATURALS, coeff=1) -> "SeqVector":
        return cls({i: coeff}, domain)

    @classmethod
    def from_list(cls, values: Sequence, domain: Domain = Domain.NATURALS, start: int = 0) -> "SeqVector":
        return cls({start + k: v for k, v in enumerate(values)}, domain)

    @property
    def domain(self) -> Domain:
        return self._domain

    @property
    def support(self) -> tuple:
        return tuple(self._entries)

    def items(self):
        return self._entries.items()

    def __getitem__(self, i: int) -> Rational:
        return self._entries.get(i, mpq(0))

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def is_zero(self) -> bool:
        return not self._entries

    def max_index(self) -> int:
        return max(self._entries) if self._entries else -1

    def _check(self, other: "SeqVector"):
        if not isinstance(other, SeqVector):
            return NotImplemented
        if other._domain is not self._domain:
            raise DomainError(f"domain mismatch: {self._domain.value} vs {other._domain.value}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        out = dict(self._entries)
        fresh = False
        for i, c in other._entries.items():
            s = out.get(i)
            if s is None:
                out[i] = c
                fresh = True
            else:
                s += c
                if s:
                    out[i] = s
                else:
                    del out[i]
        # only new keys can break the index order
        return SeqVector._trusted(dict(sorted(out.items())) if fresh else out, self._domain)

    def __neg__(self):
        return SeqVector._trusted({i: -c for i, c in self._entries.items()}, self._domain)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        out = dict(self._entries)
        fresh = False
        for i, c in other._entries.items():
            s = out.get(i)
            if s is None:
                out[i] = -c
                fresh = True
            else:
                s -= c
                if s:
                    out[i] = s
                else:
                    del out[i]
        return SeqVector._trusted(dict(sorted(out.items())) if fresh else out, self._domain)

    def __mul__(self, scalar):
        if isinstance(scalar, SeqVector):
            return NotImplemented
        a = as_rational(scalar)
        if not a:
            return SeqVector.zero(self._domain)
        return SeqVector._trusted({i: a * c for i, c in self._entries.items()}, self._domain)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        a = as_rational(scalar)
        if not a:
            raise ZeroDivisionError("division of a vector by zero")
        return self * (1 / a)

    def __eq__(self, other):
        if not isinstance(other, SeqVector):
            return NotImplemented
        return self._domain is other._domain and self._entries == other._entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._domain, tuple(self._entries.items())))
        return self._hash

    def restrict(self, keep: Callable[[int], bool]) -> "SeqVector":
        return SeqVector._trusted({i: c for i, c in self._entries.items() if keep(i)}, self._domain)

    def shift_indices(self, offset: int, domain: Domain | None = None) -> "SeqVector":
        """Relabel index ``i`` as ``i + offset``."""
        domain = domain or self._domain
        return SeqVector({i + offset: c for i, c in self._entries.items()}, domain)

    def to_text(self) -> str:
        body = ", ".join(f"{i}:{format_rational(c)}" for i, c in self._entries.items())
        return "{" + body + "}"

    @classmethod
    def parse(cls, text: str, domain: Domain = Domain.NATURALS) -> "SeqVector":
        """Inverse of :meth:`to_text`, e.g. ``"{0:1/1, 3:-2/5}"``."""
        if not isinstance(text, str):
            raise ParseError(f"vector text expected, got {text!r}")
        s = text.strip()
        if not (s.startswith("{") and s.endswith("}")):
            raise ParseError(f"malformed vector {text!r}: expected '{{index:num/den, ...}}'")
        s = s[1:-1].strip()
        entries = {}
        if s:
            for part in s.split(","):
                if ":" not in part:
                    raise ParseError(f"malformed vector entry {part!r}")
                idx, val = part.split(":", 1)
                try:
                    i = int(idx.strip())
                except ValueError:
                    raise ParseError(f"malformed index {idx!r}") from None
                if i in entries:
                    raise ParseError(f"repeated index {i} in {text!r}")
                entries[i] = parse_rational(val)
        return cls(entries, domain)

    def __repr__(self):
        tag = "" if self._domain is Domain.NATURALS else "Z"
        return f"SeqVector{tag}({self.to_text()})"


def vec_combine(a, v: SeqVector, b, w: SeqVector) -> SeqVector:
    """``a*v + b*w`` with zero entries pruned."""
    if v.domain is not w.domain:
        raise DomainError(f"domain mismatch: {v.domain.value} vs {w.domain.value}")
    return v * a + w * b


def gauge(v: SeqVector, kind: NormKind) -> Rational:
    """``||v||_p`` for p in {1, inf}; ``||v||_2 ** 2`` for p = 2."""
    vals = v._entries.values()
    if kind is NormKind.ONE:
        return sum(map(abs, vals), _ZERO)
    if kind is NormKind.INF:
        return max(map(abs, vals), default=_ZERO)
    return sum((c * c for c in vals), _ZERO)


def _lift(x: Rational, kind: NormKind) -> Rational:
    return x * x if kind is NormKind.TWO else x


def sqrt_bounds(q: Rational, bits: int = 64) -> tuple[Rational, Rational]:
    """Rationals ``lo <= sqrt(q) <= hi``, equal when ``q`` is a rational square."""
    if q < 0:
        raise DomainError("square root of a negative number")
    n, d = int(q.numerator), int(q.denominator)
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        r = mpq(rn, rd)
        return r, r
    scale = 1 << bits
    # sqrt(n/d) = sqrt(n*d)/d
    root = isqrt(n * d * scale * scale)
    return mpq(root, d * scale), mpq(root + 1, d * scale)


def norm_compare(v: SeqVector, bound, kind: NormKind = NormKind.ONE) -> Ordering:
    """Exact ordering of ``||v||_p`` against ``bound``."""
    return Norm(kind).compare(v, bound)


class Norm:
    """An l_p norm, optionally the max of l_p norms over coordinate blocks.

    ``split`` maps a vector to its block components; product and direct-sum
    spaces pass one so that ``||v|| = max_i ||v_i||``.
    """

    def __init__(self, kind: NormKind = NormKind.ONE, split: Callable[[SeqVector], list] | None = None):
        self.kind = NormKind.parse(kind)
        self.split = split

    def __repr__(self):
        return f"Norm({self.kind.value}{', blockwise' if self.split else ''})"

    def gauge(self, v: SeqVector) -> Rational:
        if self.split is None:
            return gauge(v, self.kind)
        return max((gauge(part, self.kind) for part in self.split(v)), default=mpq(0))

    def lift(self, x) -> Rational:
        x = as_rational(x)
        if x < 0:
            raise DomainError(f"negative bound {x}")
        return _lift(x, self.kind)

    def compare(self, v: SeqVector, bound) -> Ordering:
        return Ordering.of(self.gauge(v), self.lift(bound))

    def lt(self, v: SeqVector, bound) -> bool:
        return self.compare(v, bound) is Ordering.LESS

    def le(self, v: SeqVector, bound) -> bool:
        return self.compare(v, bound) is not Ordering.GREATER

    def dist_lt(self, a: SeqVector, b: SeqVector, r) -> bool:
        return self.lt(a - b, r)

    def compare_scaled(self, v: SeqVector, c, w: SeqVector) -> Ordering:
        """Ordering of ``||v||`` against ``c * ||w||`` for ``c >= 0``."""
        return Ordering.of(self.gauge(v), self.lift(c) * self.gauge(w))

    def exact(self, v: SeqVector) -> Rational | None:
        """``||v||`` when it is rational, else ``None``."""
        g = self.gauge(v)
        if self.kind is not NormKind.TWO:
            return g
        lo, hi = sqrt_bounds(g)
        return lo if lo == hi else None

    def bounds(self, v: SeqVector) -> tuple[Rational, Rational]:
        g = self.gauge(v)
        if self.kind is not NormKind.TWO:
            return g, g
        return sqrt_bounds(g)

    def upper_from_gauge(self, g: Rational) -> Rational:
        return g if self.kind is not NormKind.TWO else sqrt_bounds(g)[1]

    def upper(self, v: SeqVector) -> Rational:
        return self.bounds(v)[1]

    def lower(self, v: SeqVector) -> Rational:
        return self.bounds(v)[0]

    def min_steps(self, v: SeqVector, bound) -> int:
        """Smallest ``n >= 1`` with ``||v|| / n < bound``."""
        bound = as_rational(bound)
        if bound <= 0:
            raise DomainError("step bound must be positive")
        # n**e * bound**e > gauge  <=>  n**e > floor(gauge / bound**e)
        q = self.gauge(v) / self.lift(bound)
        fl = int(q.numerator // q.denominator)
        n = (isqrt(fl) if self.kind is NormKind.TWO else fl) + 1
        return max(n, 1)
