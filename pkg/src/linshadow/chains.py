"""Certified epsilon-chains.

A chain ``x_0, ..., x_n`` for ``T`` has ``||T x_i - x_{i+1}|| < eps`` at every
step.  Every constructor here builds the point list and then re-validates it
against the operator, so a returned :class:`Chain` is always certified.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import Norm, NormKind, Ordering, SeqVector, as_rational, format_rational
from .errors import ChainInvalid, DomainError, InfeasibleCertificate, UnsupportedCapability
from .operators import DirectSum, Operator, Product

__all__ = [
    "Chain",
    "ChainFactory",
    "validate_chain",
    "splice",
    "scale_chain",
    "span_connect_chain",
    "span_return_chain",
    "isometry_return_chain",
    "isometry_factory",
    "identity_factory",
    "sum_chain",
    "image_chain",
    "inverse_chain",
    "product_chain",
    "projection_chain",
    "NoReturnCertificate",
    "contraction_no_return_certificate",
    "chain_csv_rows",
]


@dataclass(frozen=True)
class Chain:
    points: tuple
    epsilon: Fraction
    defects: tuple
    kind: NormKind = NormKind.ONE

    @property
    def start(self) -> SeqVector:
        return self.points[0]

    @property
    def end(self) -> SeqVector:
        return self.points[-1]

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    def __len__(self):
        return len(self.points)


# A factory returns a chain from ``point`` back to ``point`` with the given tolerance.
ChainFactory = Callable[[SeqVector, Fraction], Chain]


def _defects(T: Operator, points: Sequence[SeqVector], norm: Norm):
    for i in range(len(points) - 1):
        yield i, T.apply(points[i]) - points[i + 1]


def validate_chain(T: Operator, points: Sequence[SeqVector], eps, kind=NormKind.ONE) -> Chain:
    """Certify ``points`` as an ``eps``-chain for ``T`` or raise :class:`ChainInvalid`."""
    eps = as_rational(eps)
    kind = NormKind.parse(kind)
    points = tuple(points)
    if len(points) < 2:
        raise DomainError("a chain needs at least two points")
    if eps <= 0:
        raise DomainError("chain tolerance must be positive")
    norm = T.norm(kind)
    defects = []
    for i, d in _defects(T, points, norm):
        if not norm.lt(d, eps):
            raise ChainInvalid(i, norm.upper(d), eps)
        defects.append(norm.upper(d))
    return Chain(points, eps, tuple(defects), kind)


def splice(T: Operator, chains: Sequence[Chain], eps=None) -> Chain:
    """Concatenate chains whose consecutive endpoints coincide."""
    if not chains:
        raise DomainError("nothing to splice")
    pts = list(chains[0].points)
    for c in chains[1:]:
        if c.start != pts[-1]:
            raise DomainError("spliced chains must meet end to start")
        pts.extend(c.points[1:])
    eps = max(c.epsilon for c in chains) if eps is None else eps
    return validate_chain(T, pts, eps, chains[0].kind)


def scale_chain(c: Chain, lam, T: Operator) -> Chain:
    """``{lam x_i}``; the tolerance grows to ``|lam| eps`` only when ``|lam| > 1``."""
    lam = as_rational(lam)
    eps = c.epsilon if abs(lam) <= 1 else abs(lam) * c.epsilon
    return validate_chain(T, [p * lam for p in c.points], eps, c.kind)


def identity_factory(T: Operator, kind=NormKind.ONE) -> ChainFactory:
    """Return chains ``[x, x]``; valid whenever ``||Tx - x|| < eps`` (e.g. ``T = I``)."""
    return lambda x, eps: validate_chain(T, [x, x], eps, kind)


def span_connect_chain(x: SeqVector, lam, eps, T: Operator, factory: ChainFactory,
                       kind=NormKind.ONE) -> Chain:
    """Chain from ``x`` to ``lam x`` through the interpolation points ``(1 - j/k) x + (j/k) lam x``.

    ``k`` is minimal with ``||x - lam x|| / k < eps/2``; an ``eps/2`` return chain
    from ``factory`` is spliced in at every interpolation point except the last.
    """
    lam, eps = as_rational(lam), as_rational(eps)
    norm = T.norm(kind)
    half = eps / 2
    target = x * lam
    k = norm.min_steps(x - target, half)
    pts = []
    for j in range(k):
        xj = x * (1 - Fraction(j, k)) + target * Fraction(j, k)
        loop = factory(xj, half)
        if loop.start != xj or loop.end != xj:
            raise DomainError(f"factory chain at interpolation point {j} is not a return chain")
        if loop.epsilon > half:
            raise DomainError(f"factory chain at interpolation point {j} is too coarse")
        pts.extend(loop.points[:-1])
    pts.append(target)
    return validate_chain(T, pts, eps, kind)


def span_return_chain(x: SeqVector, lam, eps, T: Operator, factory: ChainFactory,
                      kind=NormKind.ONE) -> Chain:
    """Chain from ``lam x`` back to ``x``.

    For ``lam = 0`` this prepends the origin to an ``eps/2`` chain from
    ``lam' x`` to ``x`` with ``||lam' x|| < eps/2``.
    """
    lam, eps = as_rational(lam), as_rational(eps)
    if lam:
        return span_connect_chain(x * lam, 1 / lam, eps, T, factory, kind)
    if x.is_zero():
        return validate_chain(T, [x, x], eps, kind)
    norm = T.norm(kind)
    m = norm.min_steps(x, eps / 2)
    inner = span_connect_chain(x / m, m, eps / 2, T, factory, kind)
    return validate_chain(T, [x * 0] + list(inner.points), eps, kind)


def _require_isometry(T: Operator, kind: NormKind):
    inv = T.inverse()
    if inv is None or T.norm_bound(kind) != 1 or inv.norm_bound(kind) != 1:
        raise UnsupportedCapability("isometry return chain needs ||T|| = ||T^-1|| = 1 certified")
    return inv


def isometry_return_chain(T: Operator, x: SeqVector, eps, kind=NormKind.ONE) -> Chain:
    """Return chain ``x_k = T^k x + (k/n)(T^{k-n} x - T^k x)`` for a surjective isometry.

    ``n`` is minimal with ``||x|| / n < eps/2``, so every defect is at most
    ``2||x||/n < eps``; that bound is re-checked exactly.
    """
    eps = as_rational(eps)
    kind = NormKind.parse(kind)
    inv = _require_isometry(T, kind)
    norm = T.norm(kind)
    n = norm.min_steps(x, eps / 2)
    fwd = T.orbit(x, n)
    back = inv.orbit(x, n)  # back[j] = T^{-j} x
    pts = [fwd[k] + (back[n - k] - fwd[k]) * Fraction(k, n) for k in range(n + 1)]
    chain = validate_chain(T, pts, eps, kind)
    for i, d in _defects(T, pts, norm):
        if norm.compare_scaled(d, Fraction(2, n), x) is Ordering.GREATER:
            raise ChainInvalid(i, norm.upper(d), Fraction(2, n) * norm.upper(x))
    return chain


def isometry_factory(T: Operator, kind=NormKind.ONE) -> ChainFactory:
    return lambda x, eps: isometry_return_chain(T, x, eps, kind)


def _pad_end(points, length, zero):
    return list(points) + [zero] * (length - len(points))


def sum_chain(cx: Chain, cy: Chain, T: Operator) -> Chain:
    """Pointwise sum of two chains ending at 0; the shorter is padded with zeros."""
    if not cx.end.is_zero() or not cy.end.is_zero():
        raise DomainError("sum_chain needs both chains to end at 0")
    n = max(len(cx), len(cy))
    zero = T.zero()
    xs, ys = _pad_end(cx.points, n, zero), _pad_end(cy.points, n, zero)
    return validate_chain(T, [a + b for a, b in zip(xs, ys)], cx.epsilon + cy.epsilon, cx.kind)


def image_chain(c: Chain, T: Operator, eps=None) -> Chain:
    """From a return chain at ``x`` build ``{Tx, x_2, ..., x_N, Tx}``, a return chain at ``Tx``.

    The output tolerance is ``2 max(||T||, 1)`` times the input tolerance.
    """
    if c.start != c.end:
        raise DomainError("image_chain needs a chain from x to x")
    scale = 2 * max(T.norm_bound(c.kind), Fraction(1))
    out_eps = scale * c.epsilon
    if eps is not None and out_eps > as_rational(eps):
        raise InfeasibleCertificate(
            f"input tolerance {c.epsilon} exceeds eps/(2 max(||T||,1)) = {as_rational(eps) / scale}")
    tx = T.apply(c.start)
    pts = [tx] + list(c.points[2:]) + [tx]
    return validate_chain(T, pts, out_eps, c.kind)


def inverse_chain(c: Chain, T: Operator, eps=None) -> Chain:
    """Reverse a return chain of ``T``; the result is a chain for ``T^-1``."""
    inv = T.inverse()
    if inv is None:
        raise UnsupportedCapability(f"{type(T).__name__} is not invertible")
    out_eps = inv.norm_bound(c.kind) * c.epsilon
    if eps is not None and out_eps > as_rational(eps):
        raise InfeasibleCertificate(f"input tolerance {c.epsilon} exceeds eps/||T^-1||")
    return validate_chain(inv, list(reversed(c.points)), out_eps, c.kind)


def product_chain(down: Sequence[Chain], up: Sequence[Chain], T: Product) -> tuple:
    """Chains in a product space from ``(x_1, ..., x_k)`` to the origin and back.

    Going down, factor ``i`` follows its chain ``down[i]`` to 0 while earlier
    factors rest at 0 and later factors follow their true orbits, so
    ``down[i]`` must start at the orbit point reached by then.  Going up, all
    factor chains from 0 run together and the shorter ones are padded with
    leading zeros.  Both use the max norm, so no tolerance is lost.
    """
    if not isinstance(T, Product):
        raise DomainError("product_chain needs a Product operator")
    k = len(T.factors)
    if len(down) != k or len(up) != k:
        raise DomainError(f"expected {k} chains per direction")
    kind = down[0].kind
    cur = [c.start for c in down]
    pts = [T.embed(cur)]
    for i, c in enumerate(down):
        if c.start != cur[i]:
            raise DomainError(f"down chain {i} must start at the orbit point reached by its factor")
        if not c.end.is_zero():
            raise DomainError(f"down chain {i} must end at 0")
        for p in c.points[1:]:
            cur = [p if j == i else (cur[j] if j < i else T.factors[j].apply(cur[j])) for j in range(k)]
            pts.append(T.embed(cur))
    down_chain = validate_chain(T, pts, max(c.epsilon for c in down), kind)

    for i, c in enumerate(up):
        if not c.start.is_zero():
            raise DomainError(f"up chain {i} must start at 0")
    n = max(len(c) for c in up)
    cols = [[T.factors[i].zero()] * (n - len(c)) + list(c.points) for i, c in enumerate(up)]
    up_chain = validate_chain(T, [T.embed([col[t] for col in cols]) for t in range(n)],
                              max(c.epsilon for c in up), kind)
    return down_chain, up_chain


def projection_chain(c: Chain, alpha, T: DirectSum, block: int = 0, eps=None) -> Chain:
    """Project the interior points of ``c`` onto one block of a direct sum.

    The endpoints must already lie in that block.  The tolerance is multiplied
    by ``alpha``, which must dominate the splitting constant (1 for the max norm).
    """
    alpha = as_rational(alpha)
    if not isinstance(T, DirectSum):
        raise DomainError("projection_chain needs a DirectSum operator")
    if alpha < 1:
        raise DomainError("alpha must be >= 1 for the max-norm direct sum")
    for end in (c.start, c.end):
        if T.project(end, block) != end:
            raise DomainError("chain endpoints must lie in the projected block")
    out_eps = alpha * c.epsilon
    if eps is not None and out_eps > as_rational(eps):
        raise InfeasibleCertificate("input tolerance exceeds eps/alpha")
    pts = [c.start] + [T.project(p, block) for p in c.points[1:-1]] + [c.end]
    return validate_chain(T, pts, out_eps, c.kind)


# -- no-return certificate for proper contractions ------------------------------

@dataclass
class SearchReport:
    trials: int
    seed: int
    max_length: int
    grid: int
    violations: int
    worst_ratio: Fraction  # max over trials of ||x_N|| upper bound / ||x|| lower bound
    rows: list = field(default_factory=list)


@dataclass
class NoReturnCertificate:
    """``eps`` for which no ``eps``-chain from ``x`` comes back to ``x``."""

    T: Operator
    x: SeqVector
    delta: Fraction
    eps: Fraction
    norm_bound: Fraction
    kind: NormKind

    @property
    def norm(self) -> Norm:
        return self.T.norm(self.kind)

    def terminal_bound(self, N: int) -> Fraction:
        """Upper bound ``||T^N x|| + eps/(1 - ||T||)`` on the end of any ``eps``-chain of length ``N``."""
        return self.norm.upper(self.T.power(self.x, N)) + self.eps / (1 - self.norm_bound)

    def check(self, chain: Chain) -> tuple:
        """Verify the analytic bound and the no-return conclusion for one chain.

        Returns ``(bound_ok, below_start)``.
        """
        if chain.start != self.x:
            raise DomainError("chain must start at the certified point")
        validate_chain(self.T, chain.points, self.eps, self.kind)
        N = chain.steps
        tb = self.terminal_bound(N)
        norm = self.norm
        bound_ok = norm.le(chain.end, tb) and norm.compare(self.x, tb) is Ordering.GREATER
        below = norm.compare_scaled(chain.end, 1, self.x) is Ordering.LESS
        return bound_ok, below

    def random_chain(self, rng: random.Random, length: int, grid: int) -> Chain:
        T, x, eps = self.T, self.x, self.eps
        lo, hi = (min(x.support), max(x.support))
        cands = [i for i in range(lo - 1, hi + 4) if x.domain.admits(i)]
        scale = eps * Fraction(grid - 1, grid)
        pts = [x]
        for _ in range(length):
            y = T.apply(pts[-1])
            mode = rng.randrange(3)
            if mode == 0:
                m = rng.randint(1, len(cands))
                idx = rng.sample(cands, m)
                d = SeqVector({i: eps * Fraction(rng.randint(1 - grid, grid - 1), grid * m) for i in idx},
                              x.domain)
            elif mode == 1 and not y.is_zero():
                # push outward along Ty
                d = y * (scale / sum(abs(c) for _, c in y.items()))
            else:
                # steer back toward x
                gap = x - y
                l1 = sum(abs(c) for _, c in gap.items())
                d = gap if l1 < scale else gap * (scale / l1)
            pts.append(y + d)
        return validate_chain(T, pts, eps, self.kind)

    def search(self, trials: int = 10_000, seed: int = 0, max_length: int = 12, grid: int = 64) -> SearchReport:
        """Falsification attempt: random valid chains from ``x`` must never return."""
        rng = random.Random(seed)
        xl = self.norm.lower(self.x)
        rep = SearchReport(trials, seed, max_length, grid, 0, Fraction(0))
        for t in range(trials):
            N = rng.randint(1, max_length)
            chain = self.random_chain(rng, N, grid)
            bound_ok, below = self.check(chain)
            ratio = self.norm.upper(chain.end) / xl
            rep.worst_ratio = max(rep.worst_ratio, ratio)
            if not (bound_ok and below):
                rep.violations += 1
            rep.rows.append((t, N, self.norm.upper(chain.end), self.terminal_bound(N), bound_ok and below))
        return rep


def contraction_no_return_certificate(T: Operator, x: SeqVector, delta, kind=NormKind.ONE) -> NoReturnCertificate:
    """``eps = (||x|| - ||Tx|| - delta)(1 - ||T||)`` for a proper contraction ``T``."""
    delta = as_rational(delta)
    kind = NormKind.parse(kind)
    if x.is_zero():
        raise DomainError("the origin is always chain recurrent; x must be nonzero")
    B = T.norm_bound(kind)
    if B >= 1:
        raise UnsupportedCapability(f"not a certified proper contraction (norm bound {B})")
    norm = T.norm(kind)
    eps = (norm.lower(x) - norm.upper(T.apply(x)) - delta) * (1 - B)
    if eps <= 0:
        raise InfeasibleCertificate(f"eps = {eps} <= 0 for delta = {delta}")
    return NoReturnCertificate(T, x, delta, eps, B, kind)


def chain_csv_rows(c: Chain) -> list:
    """Header plus one row per point: step, point, defect of the step into it, tolerance."""
    rows = [("step", "point", "defect", "tolerance")]
    for i, p in enumerate(c.points):
        d = "" if i == 0 else format_rational(c.defects[i - 1])
        rows.append((str(i), p.to_text(), d, format_rational(c.epsilon)))
    return rows
