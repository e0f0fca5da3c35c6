"""Linear operators on finitely supported sequences, plus polynomials on [1/2, 1].

Every operator knows a certified upper bound for its norm, its inverse when it
has one, and a right inverse ``S`` (``T S = I``) together with the factor
``s >= ||S||`` whenever ``s < 1``.  Direct sums and products are normed by the
max over their blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .core import Domain, Norm, NormKind, SeqVector, as_rational, format_rational, sqrt_bounds
from .errors import ConfigError, DomainError, ParseError, UnsupportedCapability

__all__ = [
    "Operator",
    "RightInverse",
    "WeightedBackwardShift",
    "WeightedForwardShift",
    "DoublingShiftFixedLine",
    "BilateralShift",
    "Diagonal",
    "RationalRotation",
    "Identity",
    "ScalarMultiple",
    "DirectSum",
    "Product",
    "PolyFunction",
    "apply",
    "apply_right_inverse",
    "operator_norm_bound",
    "poly_multiply_by_x",
    "from_config",
]

_ONE = Fraction(1)


class RightInverse(NamedTuple):
    op: "Operator"
    factor: Fraction


class Operator:
    """Base class of the operator zoo."""

    domain: Domain = Domain.NATURALS

    def apply(self, v: SeqVector) -> SeqVector:
        raise NotImplementedError

    def norm_bound(self, kind: NormKind = NormKind.ONE) -> Fraction:
        raise NotImplementedError

    def inverse(self) -> "Operator | None":
        return None

    def right_inverse(self, kind: NormKind = NormKind.ONE) -> RightInverse | None:
        """``(S, s)`` with ``T S = I`` and ``||S|| <= s < 1``, or ``None``."""
        inv = self.inverse()
        if inv is None:
            return None
        s = inv.norm_bound(kind)
        return RightInverse(inv, s) if s < 1 else None

    def blocks(self, v: SeqVector) -> list:
        return [v]

    @property
    def blockwise(self) -> bool:
        return False

    def norm(self, kind=NormKind.ONE) -> Norm:
        return Norm(kind, self.blocks if self.blockwise else None)

    def power(self, v: SeqVector, n: int) -> SeqVector:
        for _ in range(n):
            v = self.apply(v)
        return v

    def orbit(self, v: SeqVector, n: int) -> list:
        """``[v, Tv, ..., T^n v]``."""
        out = [v]
        for _ in range(n):
            v = self.apply(v)
            out.append(v)
        return out

    def _check(self, v: SeqVector):
        if v.domain is not self.domain:
            raise DomainError(f"{type(self).__name__} acts on {self.domain.value}, got {v.domain.value}")

    def zero(self) -> SeqVector:
        return SeqVector.zero(self.domain)

    def basis(self, i: int, coeff=1) -> SeqVector:
        return SeqVector.basis(i, self.domain, coeff)

    def to_config(self) -> dict:
        raise NotImplementedError


def _weight(prefix: tuple, tail: Fraction, j: int) -> Fraction:
    return prefix[j] if j < len(prefix) else tail


def _sup_abs(prefix: tuple, tail: Fraction) -> Fraction:
    return max([abs(w) for w in prefix] + [abs(tail)])


@dataclass(frozen=True)
class WeightedBackwardShift(Operator):
    """``e_i -> w_i e_{i-1}`` for ``i >= 1``, ``e_0 -> 0``.

    ``weights`` lists ``w_1, w_2, ...``; every later weight equals ``tail``.
    """

    weights: tuple = ()
    tail: Fraction = _ONE

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(as_rational(w) for w in self.weights))
        object.__setattr__(self, "tail", as_rational(self.tail))

    def w(self, i: int) -> Fraction:
        return _weight(self.weights, self.tail, i - 1)

    def apply(self, v):
        self._check(v)
        return SeqVector._trusted(
            {i - 1: self.w(i) * c for i, c in v.items() if i >= 1 and self.w(i)}, Domain.NATURALS)

    def norm_bound(self, kind=NormKind.ONE):
        return _sup_abs(self.weights, self.tail)

    def right_inverse(self, kind=NormKind.ONE):
        if not self.tail or not all(self.weights):
            return None
        s = _sup_abs(tuple(1 / w for w in self.weights), 1 / self.tail)
        if s >= 1:
            return None
        return RightInverse(WeightedForwardShift(tuple(1 / w for w in self.weights), 1 / self.tail), s)

    def to_config(self):
        return {"op": "weighted_backward_shift",
                "weights": [format_rational(w) for w in self.weights],
                "tail": format_rational(self.tail)}


@dataclass(frozen=True)
class WeightedForwardShift(Operator):
    """``e_i -> c_i e_{i+1}``; ``weights`` lists ``c_0, c_1, ...`` then ``tail``."""

    weights: tuple = ()
    tail: Fraction = _ONE

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(as_rational(w) for w in self.weights))
        object.__setattr__(self, "tail", as_rational(self.tail))

    def apply(self, v):
        self._check(v)
        out = {}
        for i, c in v.items():
            w = _weight(self.weights, self.tail, i)
            if w:
                out[i + 1] = w * c
        return SeqVector._trusted(out, Domain.NATURALS)

    def norm_bound(self, kind=NormKind.ONE):
        return _sup_abs(self.weights, self.tail)

    def to_config(self):
        return {"op": "weighted_forward_shift",
                "weights": [format_rational(w) for w in self.weights],
                "tail": format_rational(self.tail)}


@dataclass(frozen=True)
class DoublingShiftFixedLine(Operator):
    """``e_0 -> e_0`` and ``e_i -> 2 e_{i-1}``; right inverse ``e_i -> e_{i+1}/2``."""

    def apply(self, v):
        self._check(v)
        out = {i - 1: c + c for i, c in v.items() if i}
        c0 = v[0]
        if c0:
            c0 += out.get(0, 0)
            if c0:
                out[0] = c0
            else:
                del out[0]
            out = dict(sorted(out.items()))
        return SeqVector._trusted(out, Domain.NATURALS)

    def norm_bound(self, kind=NormKind.ONE):
        if kind is NormKind.ONE:
            return Fraction(2)  # largest column sum
        if kind is NormKind.INF:
            return Fraction(3)  # row 0 is (1, 2, 0, ...)
        # T T* = diag(5, 4, 4, ...), so ||T||_2 = sqrt(5)
        return sqrt_bounds(Fraction(5))[1]

    def right_inverse(self, kind=NormKind.ONE):
        return RightInverse(WeightedForwardShift((), Fraction(1, 2)), Fraction(1, 2))

    def to_config(self):
        return {"op": "doubling_shift_fixed_line"}


@dataclass(frozen=True)
class BilateralShift(Operator):
    """``e_i -> weight * e_{i+step}`` on ``Z``; the default step ``-1`` is the backward shift."""

    weight: Fraction = _ONE
    step: int = -1
    domain = Domain.INTEGERS

    def __post_init__(self):
        object.__setattr__(self, "weight", as_rational(self.weight))
        if self.step not in (-1, 1):
            raise ConfigError("bilateral shift step must be -1 or 1")

    def apply(self, v):
        self._check(v)
        if not self.weight:
            return self.zero()
        w, d = self.weight, self.step
        return SeqVector._trusted({i + d: w * c for i, c in v.items()}, Domain.INTEGERS)

    def norm_bound(self, kind=NormKind.ONE):
        return abs(self.weight)

    def inverse(self):
        if not self.weight:
            return None
        return BilateralShift(1 / self.weight, -self.step)

    def to_config(self):
        cfg = {"op": "bilateral_shift", "weight": format_rational(self.weight)}
        if self.step != -1:
            cfg["step"] = self.step
        return cfg


@dataclass(frozen=True)
class Diagonal(Operator):
    """``e_i -> d_i e_i`` with ``d_i = entries[i]``, or ``default`` past the list and on negative indices."""

    entries: tuple = ()
    default: Fraction = _ONE
    domain: Domain = Domain.NATURALS

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(as_rational(e) for e in self.entries))
        object.__setattr__(self, "default", as_rational(self.default))

    def d(self, i: int) -> Fraction:
        return self.entries[i] if 0 <= i < len(self.entries) else self.default

    def apply(self, v):
        self._check(v)
        out = {}
        for i, c in v.items():
            di = self.d(i)
            if di:
                out[i] = di * c
        return SeqVector._trusted(out, self.domain)

    def norm_bound(self, kind=NormKind.ONE):
        return _sup_abs(self.entries, self.default)

    def inverse(self):
        if not self.default or not all(self.entries):
            return None
        return Diagonal(tuple(1 / e for e in self.entries), 1 / self.default, self.domain)

    def to_config(self):
        cfg = {"op": "diagonal", "default": format_rational(self.default)}
        if self.entries:
            cfg["entries"] = [format_rational(e) for e in self.entries]
        if self.domain is Domain.INTEGERS:
            cfg["domain"] = "Z"
        return cfg


@dataclass(frozen=True)
class RationalRotation(Operator):
    """Rotation by the Pythagorean pair ``(a, b)`` on coordinates 0 and 1; identity elsewhere."""

    a: Fraction = Fraction(3, 5)
    b: Fraction = Fraction(4, 5)

    def __post_init__(self):
        object.__setattr__(self, "a", as_rational(self.a))
        object.__setattr__(self, "b", as_rational(self.b))
        if self.a * self.a + self.b * self.b != 1:
            raise ConfigError(f"rotation needs a^2 + b^2 = 1, got a={self.a}, b={self.b}")

    def apply(self, v):
        self._check(v)
        x0, x1 = v[0], v[1]
        out = {i: c for i, c in v.items() if i > 1}
        y0 = self.a * x0 - self.b * x1
        y1 = self.b * x0 + self.a * x1
        if y0:
            out[0] = y0
        if y1:
            out[1] = y1
        return SeqVector._trusted(dict(sorted(out.items())), Domain.NATURALS)

    def norm_bound(self, kind=NormKind.ONE):
        if kind is NormKind.TWO:
            return _ONE
        return max(_ONE, abs(self.a) + abs(self.b))

    def inverse(self):
        return RationalRotation(self.a, -self.b)

    def to_config(self):
        return {"op": "rotation", "a": format_rational(self.a), "b": format_rational(self.b)}


@dataclass(frozen=True)
class Identity(Operator):
    domain: Domain = Domain.NATURALS

    def apply(self, v):
        self._check(v)
        return v

    def norm_bound(self, kind=NormKind.ONE):
        return _ONE

    def inverse(self):
        return self

    def to_config(self):
        return {"op": "identity"} if self.domain is Domain.NATURALS else {"op": "identity", "domain": "Z"}


@dataclass(frozen=True)
class ScalarMultiple(Operator):
    lam: Fraction
    inner: Operator

    def __post_init__(self):
        object.__setattr__(self, "lam", as_rational(self.lam))

    @property
    def domain(self):
        return self.inner.domain

    def apply(self, v):
        return self.inner.apply(v) * self.lam

    def norm_bound(self, kind=NormKind.ONE):
        return abs(self.lam) * self.inner.norm_bound(kind)

    def inverse(self):
        inv = self.inner.inverse()
        if inv is None or not self.lam:
            return None
        return ScalarMultiple(1 / self.lam, inv)

    def right_inverse(self, kind=NormKind.ONE):
        if not self.lam:
            return None
        ri = self.inner.right_inverse(kind)
        if ri is None:
            # the inner factor alone may not contract, but 1/lam can make it
            inv = self.inner.inverse()
            if inv is None:
                return None
            ri = RightInverse(inv, inv.norm_bound(kind))
        s = ri.factor / abs(self.lam)
        return RightInverse(ScalarMultiple(1 / self.lam, ri.op), s) if s < 1 else None

    def blocks(self, v):
        return self.inner.blocks(v)

    @property
    def blockwise(self):
        return self.inner.blockwise

    def to_config(self):
        return {"op": "scalar_multiple", "lambda": format_rational(self.lam), "inner": self.inner.to_config()}


@dataclass(frozen=True)
class DirectSum(Operator):
    """``left`` on coordinates ``[0, offset)``, ``right`` on ``[offset, inf)`` relabelled from 0.

    ``left`` must keep ``span{e_0, ..., e_{offset-1}}`` invariant.
    """

    left: Operator
    right: Operator
    offset: int

    def __post_init__(self):
        if self.left.domain is not Domain.NATURALS or self.right.domain is not Domain.NATURALS:
            raise ConfigError("direct_sum blocks must act on N")
        if self.offset < 1:
            raise ConfigError("direct_sum offset must be >= 1")
        for i in range(self.offset):
            if self.left.apply(SeqVector.basis(i)).max_index() >= self.offset:
                raise ConfigError(f"left block does not keep [0, {self.offset}) invariant (e_{i} leaks)")

    def split2(self, v: SeqVector) -> tuple:
        """``(m, n)`` with ``m`` in left coordinates and ``n`` relabelled to start at 0."""
        k = self.offset
        m = v.restrict(lambda i: i < k)
        n = SeqVector._trusted({i - k: c for i, c in v.items() if i >= k}, Domain.NATURALS)
        return m, n

    def join(self, m: SeqVector, n: SeqVector) -> SeqVector:
        if m.max_index() >= self.offset:
            raise DomainError("left component leaves its block")
        k = self.offset
        out = dict(m.items())
        out.update((i + k, c) for i, c in n.items())
        return SeqVector._trusted(out, Domain.NATURALS)

    def project(self, v: SeqVector, block: int) -> SeqVector:
        """Component of ``v`` in block 0 (left) or 1 (right), in global coordinates."""
        k = self.offset
        return v.restrict((lambda i: i < k) if block == 0 else (lambda i: i >= k))

    def apply(self, v):
        self._check(v)
        m, n = self.split2(v)
        return self.join(self.left.apply(m), self.right.apply(n))

    def norm_bound(self, kind=NormKind.ONE):
        return max(self.left.norm_bound(kind), self.right.norm_bound(kind))

    def inverse(self):
        li, ri = self.left.inverse(), self.right.inverse()
        if li is None or ri is None:
            return None
        return DirectSum(li, ri, self.offset)

    def right_inverse(self, kind=NormKind.ONE):
        ls, rs = self.left.right_inverse(kind), self.right.right_inverse(kind)
        if ls is None or rs is None:
            return None
        try:
            op = DirectSum(ls.op, rs.op, self.offset)
        except ConfigError:
            return None
        return RightInverse(op, max(ls.factor, rs.factor))

    def blocks(self, v):
        m, n = self.split2(v)
        return self.left.blocks(m) + self.right.blocks(n)

    @property
    def blockwise(self):
        return True

    def to_config(self):
        return {"op": "direct_sum", "left": self.left.to_config(), "right": self.right.to_config(),
                "offset": self.offset}


@dataclass(frozen=True)
class Product(Operator):
    """Cartesian product; factor ``f`` owns global indices ``f, f + k, f + 2k, ...``."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ConfigError("product needs at least one factor")
        doms = {f.domain for f in self.factors}
        if len(doms) != 1:
            raise ConfigError("product factors must share a domain")

    @property
    def domain(self):
        return self.factors[0].domain

    def split(self, v: SeqVector) -> list:
        k = len(self.factors)
        parts = [{} for _ in range(k)]
        for g, c in v.items():
            parts[g % k][g // k] = c
        return [SeqVector._trusted(p, self.domain) for p in parts]

    def embed(self, parts: Sequence[SeqVector]) -> SeqVector:
        k = len(self.factors)
        if len(parts) != k:
            raise DomainError(f"expected {k} components, got {len(parts)}")
        out = {}
        for f, part in enumerate(parts):
            for j, c in part.items():
                out[k * j + f] = c
        return SeqVector(out, self.domain)

    def apply(self, v):
        self._check(v)
        return self.embed([T.apply(p) for T, p in zip(self.factors, self.split(v))])

    def norm_bound(self, kind=NormKind.ONE):
        return max(T.norm_bound(kind) for T in self.factors)

    def inverse(self):
        invs = [T.inverse() for T in self.factors]
        if any(i is None for i in invs):
            return None
        return Product(tuple(invs))

    def right_inverse(self, kind=NormKind.ONE):
        ris = [T.right_inverse(kind) for T in self.factors]
        if any(r is None for r in ris):
            return None
        return RightInverse(Product(tuple(r.op for r in ris)), max(r.factor for r in ris))

    def blocks(self, v):
        out = []
        for T, p in zip(self.factors, self.split(v)):
            out.extend(T.blocks(p))
        return out

    @property
    def blockwise(self):
        return True

    def to_config(self):
        return {"op": "product", "factors": [f.to_config() for f in self.factors]}


def apply(T: Operator, v: SeqVector) -> SeqVector:
    return T.apply(v)


def apply_right_inverse(T: Operator, v: SeqVector, kind: NormKind = NormKind.ONE) -> SeqVector:
    ri = T.right_inverse(kind)
    if ri is None:
        raise UnsupportedCapability(f"{type(T).__name__} declares no contractive right inverse")
    return ri.op.apply(v)


def operator_norm_bound(T: Operator, kind: NormKind = NormKind.ONE) -> Fraction:
    return T.norm_bound(kind)


# -- polynomials on [1/2, 1] -------------------------------------------------

def _moment(k: int) -> Fraction:
    """Integral of x**k over [1/2, 1]."""
    return (1 - Fraction(1, 2 ** (k + 1))) / (k + 1)


@dataclass(frozen=True)
class PolyFunction:
    """Polynomial ``sum c_k x**k`` viewed as an element of L1[1/2, 1]."""

    coefficients: tuple = ()

    def __post_init__(self):
        cs = [as_rational(c) for c in self.coefficients]
        while cs and not cs[-1]:
            cs.pop()
        object.__setattr__(self, "coefficients", tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __add__(self, other):
        a, b = self.coefficients, other.coefficients
        n = max(len(a), len(b))
        return PolyFunction(tuple((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)))

    def __neg__(self):
        return PolyFunction(tuple(-c for c in self.coefficients))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        s = as_rational(scalar)
        return PolyFunction(tuple(s * c for c in self.coefficients))

    __rmul__ = __mul__

    def multiply_by_x(self) -> "PolyFunction":
        if not self.coefficients:
            return self
        return PolyFunction((Fraction(0),) + self.coefficients)

    def __call__(self, x) -> Fraction:
        x = as_rational(x)
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def integral(self) -> Fraction:
        """Exact integral over [1/2, 1]."""
        return sum((c * _moment(k) for k, c in enumerate(self.coefficients)), Fraction(0))

    def l1_norm(self) -> Fraction:
        """Exact L1[1/2, 1] norm for polynomials whose coefficients share a sign.

        Such polynomials do not change sign on positive arguments, so the norm
        is the absolute value of the integral.
        """
        cs = [c for c in self.coefficients if c]
        if all(c > 0 for c in cs) or all(c < 0 for c in cs):
            return abs(self.integral())
        raise DomainError("exact L1 norm needs coefficients of one sign")

    def l1_upper(self) -> Fraction:
        """``sum |c_k| * int x**k``, an upper bound for the L1 norm."""
        return sum((abs(c) * _moment(k) for k, c in enumerate(self.coefficients)), Fraction(0))


def poly_multiply_by_x(f: PolyFunction) -> PolyFunction:
    return f.multiply_by_x()


# -- configs -----------------------------------------------------------------

def _rat(cfg: dict, key: str, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing key {key!r} in {cfg}")
        return as_rational(default)
    try:
        return as_rational(cfg[key])
    except ParseError as exc:
        raise ParseError(f"{key}: {exc}") from None


def _domain(cfg: dict) -> Domain:
    d = str(cfg.get("domain", "N")).upper()
    if d not in ("N", "Z"):
        raise ConfigError(f"unknown domain {cfg.get('domain')!r}")
    return Domain(d)


def from_config(cfg: dict) -> Operator:
    """Build an operator from its structured config, e.g. ``{"op": "diagonal", "default": "1/2"}``."""
    if not isinstance(cfg, dict) or "op" not in cfg:
        raise ConfigError(f"operator config needs an 'op' key: {cfg!r}")
    op = cfg["op"]
    if op == "doubling_shift_fixed_line":
        return DoublingShiftFixedLine()
    if op in ("weighted_backward_shift", "weighted_forward_shift"):
        if "tail" not in cfg:
            raise ConfigError(f"{op}: weights must end in a constant 'tail' so the norm is bounded")
        weights = tuple(as_rational(w) for w in cfg.get("weights", ()))
        cls = WeightedBackwardShift if op == "weighted_backward_shift" else WeightedForwardShift
        return cls(weights, _rat(cfg, "tail"))
    if op == "bilateral_shift":
        return BilateralShift(_rat(cfg, "weight", 1), int(cfg.get("step", -1)))
    if op == "diagonal":
        return Diagonal(tuple(as_rational(e) for e in cfg.get("entries", ())), _rat(cfg, "default", 1), _domain(cfg))
    if op == "rotation":
        return RationalRotation(_rat(cfg, "a"), _rat(cfg, "b"))
    if op == "identity":
        return Identity(_domain(cfg))
    if op == "scalar_multiple":
        return ScalarMultiple(_rat(cfg, "lambda"), from_config(cfg["inner"]))
    if op == "direct_sum":
        if "offset" not in cfg:
            raise ConfigError("direct_sum needs an 'offset'")
        return DirectSum(from_config(cfg["left"]), from_config(cfg["right"]), int(cfg["offset"]))
    if op == "product":
        return Product(tuple(from_config(f) for f in cfg["factors"]))
    raise ConfigError(f"unknown operator {op!r}")
