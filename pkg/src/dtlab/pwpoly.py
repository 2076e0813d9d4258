"""Exact piecewise-polynomial functions on [0,1] with rational coefficients.

These model elements of the diagonal algebra (essentially bounded functions on
the unit interval); every operation is exact over ``fractions.Fraction``.
Intervals follow a left-closed convention: a piece ``[lo, hi)`` owns its left
endpoint, and the last piece also owns 1.  Breakpoint values are irrelevant to
every integral computed here, but the convention makes pointwise evaluation
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import UsageError

Rational = Union[Fraction, int, str]

ZERO = Fraction(0)
ONE = Fraction(1)


def as_fraction(x: Rational) -> Fraction:
    """Coerce ints, 'p/q' strings and Fractions to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"not a valid rational: {x!r}") from exc
    raise UsageError(f"cannot interpret {type(x).__name__} as an exact rational")


# -- dense polynomial helpers (coefficient tuples, low degree first) --------

def _pstrip(c: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    n = len(c)
    while n and c[n - 1] == 0:
        n -= 1
    return c[:n]


def _padd(a: tuple[Fraction, ...], b: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, v in enumerate(b):
        out[i] += v
    return _pstrip(tuple(out))


def _pmul(a: tuple[Fraction, ...], b: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    if not a or not b:
        return ()
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return _pstrip(tuple(out))


def _pscale(a: tuple[Fraction, ...], s: Fraction) -> tuple[Fraction, ...]:
    if s == 0:
        return ()
    return tuple(s * c for c in a)


def _peval(a: tuple[Fraction, ...], x: Fraction) -> Fraction:
    acc = ZERO
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _pantider(a: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    """Antiderivative with zero constant term."""
    return (ZERO,) + tuple(c / (i + 1) for i, c in enumerate(a))


@dataclass(frozen=True)
class PiecewisePoly:
    """A piecewise polynomial on [0,1], canonically normalized.

    ``pieces`` is a tuple of ``(lo, hi, coeffs)`` with rational breakpoints
    ``0 = lo_0 < hi_0 = lo_1 < ... < hi_last = 1`` and coefficient tuples in
    increasing degree; the zero polynomial is the empty tuple.  Adjacent
    pieces with identical coefficients are merged, so equality of values is
    equality almost everywhere.
    """

    pieces: tuple[tuple[Fraction, Fraction, tuple[Fraction, ...]], ...]

    def __post_init__(self):
        object.__setattr__(self, "pieces", _canonical(self.pieces))
        # Fraction hashing is expensive (modular pow); hash once at build time
        object.__setattr__(self, "_hash", hash(self.pieces))

    def __hash__(self):
        return self._hash

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(c: Rational) -> "PiecewisePoly":
        v = as_fraction(c)
        return PiecewisePoly(((ZERO, ONE, (v,) if v else ()),))

    @staticmethod
    def identity() -> "PiecewisePoly":
        """The coordinate function x."""
        return PiecewisePoly(((ZERO, ONE, (ZERO, ONE)),))

    @staticmethod
    def monomial(k: int, coeff: Rational = 1) -> "PiecewisePoly":
        if k < 0:
            raise UsageError("monomial degree must be nonnegative")
        c = as_fraction(coeff)
        return PiecewisePoly(((ZERO, ONE, (ZERO,) * k + (c,)),))

    @staticmethod
    def poly(coeffs: Sequence[Rational]) -> "PiecewisePoly":
        return PiecewisePoly(((ZERO, ONE, tuple(as_fraction(c) for c in coeffs)),))

    @staticmethod
    def step(breaks: Sequence[Rational], values: Sequence[Rational]) -> "PiecewisePoly":
        """Step function: ``values[i]`` on ``[breaks[i], breaks[i+1])``.

        ``breaks`` must start at 0 and end at 1.
        """
        bs = [as_fraction(b) for b in breaks]
        vs = [as_fraction(v) for v in values]
        if len(bs) != len(vs) + 1:
            raise UsageError("need one more breakpoint than values")
        pieces = tuple((bs[i], bs[i + 1], (vs[i],) if vs[i] else ()) for i in range(len(vs)))
        return PiecewisePoly(pieces)

    @staticmethod
    def indicator(lo: Rational, hi: Rational) -> "PiecewisePoly":
        """Indicator of the subinterval [lo, hi) of [0,1]."""
        a, b = as_fraction(lo), as_fraction(hi)
        if not 0 <= a < b <= 1:
            raise UsageError("indicator needs 0 <= lo < hi <= 1")
        breaks = [x for x in (ZERO, a, b, ONE)]
        breaks = sorted(set(breaks))
        values = [1 if a <= m < b else 0 for m in breaks[:-1]]
        return PiecewisePoly.step(breaks, values)

    @staticmethod
    def zero() -> "PiecewisePoly":
        return PiecewisePoly(((ZERO, ONE, ()),))

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        return _combine(self, other, _padd)

    def __sub__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        return self + (-other)

    def __neg__(self) -> "PiecewisePoly":
        return PiecewisePoly(tuple((lo, hi, _pscale(c, Fraction(-1))) for lo, hi, c in self.pieces))

    def __mul__(self, other):
        if isinstance(other, PiecewisePoly):
            return _combine(self, other, _pmul)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, s: Rational) -> "PiecewisePoly":
        v = as_fraction(s)
        return PiecewisePoly(tuple((lo, hi, _pscale(c, v)) for lo, hi, c in self.pieces))

    def is_zero(self) -> bool:
        return all(not c for _, _, c in self.pieces)

    # -- evaluation and integration ----------------------------------------

    def evaluate(self, x: Rational) -> Fraction:
        v = as_fraction(x)
        if not 0 <= v <= 1:
            raise UsageError(f"evaluation point {v} outside [0,1]")
        for lo, hi, c in self.pieces:
            if lo <= v < hi:
                return _peval(c, v)
        return _peval(self.pieces[-1][2], v)  # x == 1

    def eval_float(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized float evaluation, used by the Monte Carlo samplers."""
        xs = np.asarray(xs, dtype=float)
        out = np.empty_like(xs)
        for lo, hi, c in self.pieces:
            mask = (xs >= float(lo)) & (xs < float(hi))
            out[mask] = np.polyval([float(v) for v in reversed(c)] or [0.0], xs[mask])
        last = self.pieces[-1]
        mask = xs == 1.0
        out[mask] = np.polyval([float(v) for v in reversed(last[2])] or [0.0], xs[mask])
        return out

    def integral(self) -> Fraction:
        """Exact integral over [0,1]."""
        total = ZERO
        for lo, hi, c in self.pieces:
            f = _pantider(c)
            total += _peval(f, hi) - _peval(f, lo)
        return total

    def integrate_left(self) -> "PiecewisePoly":
        """x -> integral of self over [0, x]."""
        acc = ZERO
        out = []
        for lo, hi, c in self.pieces:
            f = _pantider(c)
            shift = acc - _peval(f, lo)
            out.append((lo, hi, _padd(f, (shift,) if shift else ())))
            acc += _peval(f, hi) - _peval(f, lo)
        return PiecewisePoly(tuple(out))

    def integrate_right(self) -> "PiecewisePoly":
        """x -> integral of self over [x, 1]."""
        total = PiecewisePoly.constant(self.integral())
        return total - self.integrate_left()

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical plain-text form, exact rationals as p/q.

        Example: ``[0,1/2):1,-1/2|[1/2,1]:0`` is 1 - x/2 on [0,1/2) and 0
        after.  Stable across runs (canonical pieces, canonical fractions).
        """
        parts = []
        for i, (lo, hi, c) in enumerate(self.pieces):
            close = "]" if i == len(self.pieces) - 1 else ")"
            coeffs = ",".join(str(v) for v in c) if c else "0"
            parts.append(f"[{lo},{hi}{close}:{coeffs}")
        return "|".join(parts)

    @staticmethod
    def from_text(text: str) -> "PiecewisePoly":
        pieces = []
        for part in text.split("|"):
            try:
                head, coeffs = part.split(":", 1)
                lo, hi = head.strip("[])").split(",")
                cs = () if coeffs == "0" else tuple(as_fraction(c) for c in coeffs.split(","))
                pieces.append((as_fraction(lo), as_fraction(hi), cs))
            except ValueError as exc:
                raise UsageError(f"malformed piecewise-poly text: {part!r}") from exc
        return PiecewisePoly(tuple(pieces))

    def __repr__(self):
        return f"PiecewisePoly({self.to_text()})"


def _canonical(pieces) -> tuple[tuple[Fraction, Fraction, tuple[Fraction, ...]], ...]:
    if not pieces:
        raise UsageError("a piecewise polynomial needs at least one piece")
    norm = sorted(((as_fraction(lo), as_fraction(hi),
                    _pstrip(tuple(as_fraction(c) for c in cs))) for lo, hi, cs in pieces),
                  key=lambda p: p[0])
    if norm[0][0] != 0 or norm[-1][1] != 1:
        raise UsageError("pieces must cover [0,1]")
    for (_, hi_a, _), (lo_b, _, _) in zip(norm, norm[1:]):
        if hi_a != lo_b:
            raise UsageError("pieces must be contiguous and disjoint")
    for lo, hi, _ in norm:
        if not lo < hi:
            raise UsageError("pieces must have positive length")
    merged: list = []
    for piece in norm:
        if merged and merged[-1][2] == piece[2]:
            merged[-1] = (merged[-1][0], piece[1], piece[2])
        else:
            merged.append(piece)
    return tuple(merged)


def _combine(a: PiecewisePoly, b: PiecewisePoly, op) -> PiecewisePoly:
    pa, pb = a.pieces, b.pieces
    if len(pa) == 1 and len(pb) == 1:  # fast path: two global polynomials
        return PiecewisePoly(((ZERO, ONE, op(pa[0][2], pb[0][2])),))
    cuts = sorted({lo for lo, _, _ in pa} | {lo for lo, _, _ in pb} | {ONE})
    out = []
    ia = ib = 0
    for lo, hi in zip(cuts, cuts[1:]):
        while pa[ia][1] <= lo:
            ia += 1
        while pb[ib][1] <= lo:
            ib += 1
        out.append((lo, hi, op(pa[ia][2], pb[ib][2])))
    return PiecewisePoly(tuple(out))


PW_ZERO = PiecewisePoly.zero()
PW_ONE = PiecewisePoly.constant(1)
PW_X = PiecewisePoly.identity()
