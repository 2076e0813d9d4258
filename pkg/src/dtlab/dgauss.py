"""Exact moments of the diagonal-Gaussian generator family with insertions.

The generators T1, T2 and their adjoints form a centered operator-valued
Gaussian family over the diagonal algebra (piecewise polynomials on [0,1]).
Conditional expectations of words are sums over non-crossing pairings of the
generator positions: a pairing contributes only if every pair matches in
family and is adjoint-opposite, and nested pairs are evaluated inside-out
through the covariance maps

    L(f)(x)  = integral of f over [x, 1]      for  T f T*
    L*(f)(x) = integral of f over [0, x]      for  T* f T

with the diagonal insertions multiplied in between (the diagonal algebra is
commutative, so insertion products may be formed pointwise).  The trace is
the integral of the conditional expectation.  Everything here is exact.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import DTLabError, UsageError
from .ncpart import (MomentSequence, all_words, circular_moments,
                     free_mixed_moments, moments_to_cumulants)
from .pwpoly import PW_ONE, PW_X, PW_ZERO, PiecewisePoly, Rational, as_fraction

WORD_CAP = 12           # generators per monomial word
CONJUGATE_WORD_CAP = 5  # letters per conjugate-relation word

# generator encoding: family = g >> 1, adjoint flag = g & 1
GEN_T1, GEN_T1S, GEN_T2, GEN_T2S = 0, 1, 2, 3
GEN_NAMES = ("T1", "T1*", "T2", "T2*")
GEN_BY_NAME = {name: i for i, name in enumerate(GEN_NAMES)}


def sqrt_fraction(q: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if irrational."""
    if q < 0:
        return None
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class Word:
    """Alternating word d0 g1 d1 ... gk dk; ``ins`` has one more entry than ``gens``."""

    gens: tuple[int, ...]
    ins: tuple[PiecewisePoly, ...]

    def __post_init__(self):
        if len(self.ins) != len(self.gens) + 1:
            raise UsageError("a word needs exactly len(gens)+1 insertions")
        object.__setattr__(self, "_hash", hash((self.gens, self.ins)))

    def __hash__(self):
        return self._hash

    def adjoint(self) -> "Word":
        return Word(tuple(g ^ 1 for g in reversed(self.gens)), tuple(reversed(self.ins)))

    def concat(self, other: "Word") -> "Word":
        mid = _pw_product(self.ins[-1], other.ins[0])
        return Word(self.gens + other.gens, self.ins[:-1] + (mid,) + other.ins[1:])


@functools.lru_cache(maxsize=None)
def _pw_product(a: PiecewisePoly, b: PiecewisePoly) -> PiecewisePoly:
    if a == PW_ONE:
        return b
    if b == PW_ONE:
        return a
    return a * b


_EMPTY = Word((), (PW_ONE,))


@dataclass(frozen=True)
class WordExpr:
    """Rational linear combination of words; the *-algebra the engine works in."""

    terms: tuple[tuple[Fraction, Word], ...]

    def __post_init__(self):
        merged: dict[Word, Fraction] = {}
        for c, w in self.terms:
            merged[w] = merged.get(w, Fraction(0)) + as_fraction(c)
        object.__setattr__(self, "terms", tuple(
            (c, w) for w, c in sorted(merged.items(), key=lambda kv: _word_key(kv[0])) if c != 0))

    # -- constructors --------------------------------------------------------

    @staticmethod
    def generator(name: Union[str, int]) -> "WordExpr":
        g = GEN_BY_NAME[name] if isinstance(name, str) else name
        return WordExpr(((Fraction(1), Word((g,), (PW_ONE, PW_ONE))),))

    @staticmethod
    def diagonal(d: PiecewisePoly) -> "WordExpr":
        return WordExpr(((Fraction(1), Word((), (d,))),))

    @staticmethod
    def scalar(c: Rational) -> "WordExpr":
        return WordExpr(((as_fraction(c), _EMPTY),))

    # -- algebra ---------------------------------------------------------

    def __add__(self, other: "WordExpr") -> "WordExpr":
        return WordExpr(self.terms + other.terms)

    def __sub__(self, other: "WordExpr") -> "WordExpr":
        return self + (-other)

    def __neg__(self) -> "WordExpr":
        return WordExpr(tuple((-c, w) for c, w in self.terms))

    def __mul__(self, other):
        if isinstance(other, WordExpr):
            return WordExpr(tuple((ca * cb, wa.concat(wb))
                                  for ca, wa in self.terms for cb, wb in other.terms))
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c: Rational) -> "WordExpr":
        v = as_fraction(c)
        return WordExpr(tuple((v * coeff, w) for coeff, w in self.terms))

    def adjoint(self) -> "WordExpr":
        return WordExpr(tuple((c, w.adjoint()) for c, w in self.terms))

    def commutator(self, other: "WordExpr") -> "WordExpr":
        return self * other - other * self

    def is_zero(self) -> bool:
        return not self.terms

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical plain-text form: ``coeff*{d0}g1{d1}...`` terms joined by ' + '."""
        if not self.terms:
            return "0"
        parts = []
        for c, w in self.terms:
            bits = [f"{c}*", "{", w.ins[0].to_text(), "}"]
            for g, d in zip(w.gens, w.ins[1:]):
                bits += [GEN_NAMES[g], "{", d.to_text(), "}"]
            parts.append("".join(bits))
        return " + ".join(parts)

    @staticmethod
    def from_text(text: str) -> "WordExpr":
        text = text.strip()
        if text == "0":
            return WordExpr(())
        terms = []
        for part in text.split(" + "):
            try:
                coeff_txt, rest = part.split("*", 1)
                coeff = as_fraction(coeff_txt)
                ins, gens = [], []
                while rest:
                    if rest[0] != "{":
                        raise ValueError(rest)
                    end = rest.index("}")
                    ins.append(PiecewisePoly.from_text(rest[1:end]))
                    rest = rest[end + 1:]
                    if rest:
                        for name in sorted(GEN_NAMES, key=len, reverse=True):
                            if rest.startswith(name):
                                gens.append(GEN_BY_NAME[name])
                                rest = rest[len(name):]
                                break
                        else:
                            raise ValueError(rest)
                terms.append((coeff, Word(tuple(gens), tuple(ins))))
            except (ValueError, IndexError) as exc:
                raise UsageError(f"malformed word-expression text: {part!r}") from exc
        return WordExpr(tuple(terms))


def _word_key(w: Word):
    # cheap deterministic ordering: cached polynomial hashes break near-ties;
    # int/tuple hashes are unsalted, so the order is stable across runs
    return (len(w.gens), w.gens, tuple(d._hash for d in w.ins))


EXPR_ONE = WordExpr.scalar(1)
T1 = WordExpr.generator(GEN_T1)
T1S = WordExpr.generator(GEN_T1S)
T2 = WordExpr.generator(GEN_T2)
T2S = WordExpr.generator(GEN_T2S)


# -- covariance maps and the pairing engine ----------------------------------


@functools.lru_cache(maxsize=None)
def cov_L(f: PiecewisePoly) -> PiecewisePoly:
    """Covariance of (T, T*): x -> integral of f over [x, 1]."""
    return f.integrate_right()


@functools.lru_cache(maxsize=None)
def cov_Lstar(f: PiecewisePoly) -> PiecewisePoly:
    """Covariance of (T*, T): x -> integral of f over [0, x]."""
    return f.integrate_left()


@functools.lru_cache(maxsize=None)
def _ed(gens: tuple[int, ...], ins: tuple[PiecewisePoly, ...]) -> PiecewisePoly:
    k = len(gens)
    if k == 0:
        return ins[0]
    if k % 2:
        return PW_ZERO
    g0 = gens[0]
    total = None
    for j in range(1, k, 2):
        gj = gens[j]
        # pairs must match in family and be adjoint-opposite
        if (g0 >> 1) != (gj >> 1) or (g0 & 1) == (gj & 1):
            continue
        inner = _ed(gens[1:j], ins[1:j + 1])
        if inner.is_zero():
            continue
        pair_val = cov_L(inner) if not (g0 & 1) else cov_Lstar(inner)
        rest = _ed(gens[j + 1:], ins[j + 1:])
        if rest.is_zero():
            continue
        term = ins[0] * pair_val * rest
        total = term if total is None else total + term
    return PW_ZERO if total is None else total


def ed_moment(expr: WordExpr) -> PiecewisePoly:
    """Conditional expectation onto the diagonal algebra, exactly."""
    acc = PW_ZERO
    for c, w in expr.terms:
        if len(w.gens) > WORD_CAP:
            raise UsageError(f"word has {len(w.gens)} generators, cap is {WORD_CAP}")
        val = _ed(w.gens, w.ins)
        if not val.is_zero():
            acc = acc + val.scale(c)
    return acc


@functools.lru_cache(maxsize=None)
def _tau_word(w: Word) -> Fraction:
    if len(w.gens) > WORD_CAP:
        raise UsageError(f"word has {len(w.gens)} generators, cap is {WORD_CAP}")
    return _ed(w.gens, w.ins).integral()


def tau(expr: WordExpr) -> Fraction:
    """The trace: integral over [0,1] of the conditional expectation."""
    return sum((c * _tau_word(w) for c, w in expr.terms), Fraction(0))


# -- the deformation family S_t and its conjugate candidate -------------------


def _exact_params(t: Rational, csq: Rational) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    tv, cv = as_fraction(t), as_fraction(csq)
    if tv <= 0 or cv <= 0:
        raise UsageError("parameters t and csq must be positive")
    s = sqrt_fraction(tv / (cv + tv))
    u = sqrt_fraction(1 / tv)
    if s is None or u is None:
        raise UsageError(
            "t/(csq+t) and 1/t must be squares of rationals for the exact engine; "
            "for arbitrary parameters use the Monte Carlo path in ensembles")
    return tv, cv, s, u


def st_expr(t: Rational, csq: Rational, diag: PiecewisePoly = PW_X) -> WordExpr:
    """The rescaled deformation (1/sqrt t) diag + sqrt((csq+t)/t) T1 + T2*."""
    _, _, s, u = _exact_params(t, csq)
    return WordExpr.diagonal(diag).scale(u) + T1.scale(1 / s) + T2S


def xi_expr(t: Rational, csq: Rational) -> WordExpr:
    """Conjugate candidate sqrt(t/(csq+t)) T1* + T2."""
    _, _, s, _ = _exact_params(t, csq)
    return T1S.scale(s) + T2


def conjugate_residual(xi: WordExpr, letters: Sequence[str],
                       insertions: Sequence[PiecewisePoly],
                       variables: Mapping[str, WordExpr],
                       claimed: str) -> Fraction:
    """Left side minus right side of the conjugate relation for one word.

    ``letters`` picks variables by name (e.g. "S", "S*"), ``insertions``
    supplies the len(letters)+1 diagonal elements, and ``claimed`` names the
    variable that ``xi`` claims to be conjugate to.  Zero certifies the
    relation for this word; with no letters the relation reads tau(xi b) = 0.
    """
    letters = list(letters)
    if len(insertions) != len(letters) + 1:
        raise UsageError("need exactly len(letters)+1 insertions")
    if len(letters) > CONJUGATE_WORD_CAP:
        raise UsageError(f"conjugate words capped at {CONJUGATE_WORD_CAP} letters")
    if claimed not in variables:
        raise UsageError(f"claimed variable {claimed!r} not among {sorted(variables)}")
    factors = [WordExpr.diagonal(insertions[0])]
    for letter, b in zip(letters, insertions[1:]):
        if letter not in variables:
            raise UsageError(f"unknown letter {letter!r}")
        factors.append(variables[letter])
        factors.append(WordExpr.diagonal(b))
    lhs_expr = xi
    for f in factors:
        lhs_expr = lhs_expr * f
    lhs = tau(lhs_expr)

    rhs = Fraction(0)
    for m, letter in enumerate(letters):
        if letter != claimed:
            continue
        left = WordExpr.diagonal(insertions[0])
        for l, b in zip(letters[:m], insertions[1:m + 1]):
            left = left * variables[l] * WordExpr.diagonal(b)
        right = WordExpr.diagonal(insertions[m + 1])
        for l, b in zip(letters[m + 1:], insertions[m + 2:]):
            right = right * variables[l] * WordExpr.diagonal(b)
        rhs += tau(left) * tau(right)
    return lhs - rhs


def st_variables(t: Rational, csq: Rational, diag: PiecewisePoly = PW_X) -> dict[str, WordExpr]:
    s = st_expr(t, csq, diag)
    return {"S": s, "S*": s.adjoint()}


def st_conjugate_residual(xi: WordExpr, letters: Sequence[str],
                          insertions: Sequence[PiecewisePoly],
                          t: Rational, csq: Rational,
                          diag: PiecewisePoly = PW_X, claimed: str = "S") -> Fraction:
    """Conjugate-relation residual for the deformation family at (t, csq)."""
    return conjugate_residual(xi, letters, insertions, st_variables(t, csq, diag), claimed)


def conjugate_relation_sweep(t: Rational, csq: Rational, max_len: int,
                             insertion_basis: Sequence[PiecewisePoly],
                             diag: PiecewisePoly = PW_X) -> list[ExactCheck]:
    """Residuals of every conjugate relation up to ``max_len`` letters.

    Covers both conjugate candidates (for the variable and its adjoint), all
    letter patterns and all insertion tuples drawn from ``insertion_basis``;
    both relation sides are multilinear in the insertions, so a spanning
    basis certifies every polynomial insertion in its span.  Word traces are
    shared across residuals through a prefix tree, which keeps the full
    length-4, degree-2 sweep fast.
    """
    if max_len > CONJUGATE_WORD_CAP - 1:
        raise UsageError(f"sweep capped at {CONJUGATE_WORD_CAP - 1} letters")
    variables = st_variables(t, csq, diag)
    basis = list(insertion_basis)
    if not basis:
        raise UsageError("insertion basis must be nonempty")
    factors = {(l, i): (variables[l] * WordExpr.diagonal(b)).terms
               for l in variables for i, b in enumerate(basis)}

    # raw {Word: coeff} dicts in the hot loop; WordExpr normalization is
    # wasted work for throwaway intermediate products
    def mul_raw(terms: dict, fac: tuple) -> dict:
        out: dict[Word, Fraction] = {}
        for w, c in terms.items():
            for cf, wf in fac:
                nw = w.concat(wf)
                nc = c * cf
                if nw in out:
                    out[nw] += nc
                else:
                    out[nw] = nc
        return out

    def tau_raw(terms: dict) -> Fraction:
        return sum((c * _tau_word(w) for w, c in terms.items()), Fraction(0))

    plain: dict[tuple, Fraction] = {}

    def grow(key: tuple, terms: dict, table: dict):
        table[key] = tau_raw(terms)
        letters, ins = key
        if len(letters) == max_len:
            return
        for (l, i), fac in factors.items():
            grow((letters + (l,), ins + (i,)), mul_raw(terms, fac), table)

    for i, b in enumerate(basis):
        grow(((), (i,)), {Word((), (b,)): Fraction(1)}, plain)

    checks = []
    for claimed, xi in (("S", xi_expr(t, csq)), ("S*", xi_expr(t, csq).adjoint())):
        lhs_table: dict[tuple, Fraction] = {}
        for i, b in enumerate(basis):
            grow(((), (i,)), dict((w, c) for c, w in (xi * WordExpr.diagonal(b)).terms),
                 lhs_table)
        for (letters, ins), lhs in sorted(lhs_table.items()):
            rhs = Fraction(0)
            for m, letter in enumerate(letters):
                if letter == claimed:
                    rhs += (plain[(letters[:m], ins[:m + 1])]
                            * plain[(letters[m + 1:], ins[m + 1:])])
            word = "".join(letters) if letters else "1"
            ins_label = ",".join(str(i) for i in ins)
            checks.append(ExactCheck(
                f"conj[{claimed}|{word}|b({ins_label})]", Fraction(0), lhs - rhs))
    return run_all(checks)


def fisher_exact(t: Rational, csq: Rational) -> Fraction:
    """Relative Fisher information of the deformation pair, from the engine.

    Computes 2 tau(xi* xi) for the verified conjugate system and checks it
    against the closed form t/(csq+t) + 1 before returning it.
    """
    tv, cv, _, _ = _exact_params(t, csq)
    xi = xi_expr(tv, cv)
    value = 2 * tau(xi.adjoint() * xi)
    closed = tv / (cv + tv) + 1
    if value != closed:
        raise DTLabError(f"engine value {value} disagrees with closed form {closed}")
    return value


# -- named identity checks -----------------------------------------------------


@dataclass(frozen=True)
class ExactCheck:
    """One exact identity record: a label, the expected and the computed value."""

    name: str
    expected: Fraction
    actual: Fraction

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


def run_all(checks: Iterable[ExactCheck]) -> list[ExactCheck]:
    out = list(checks)
    if not out:
        raise UsageError("no checks selected")
    return out


def star_moment_sequence(z: WordExpr, order: int,
                         letters: tuple[str, str] = ("c", "c*")) -> MomentSequence:
    """Moments tau(w) for all *-words w in (z, z*) up to the given order."""
    ops = {letters[0]: z, letters[1]: z.adjoint()}
    values: dict[tuple[str, ...], Fraction] = {(): Fraction(1)}

    def descend(word: tuple[str, ...], expr: WordExpr):
        if len(word) == order:
            return
        for l in letters:  # share prefix products across words
            ext = expr * ops[l]
            values[word + (l,)] = tau(ext)
            descend(word + (l,), ext)

    descend((), EXPR_ONE)
    return MomentSequence(order, values)


def circularity_check(max_len: int) -> list[ExactCheck]:
    """All *-cumulants of T1 + T2* up to max_len: only the (c,c*) pairs survive."""
    if max_len > 8:
        raise UsageError("circularity check capped at order 8")
    c = T1 + T2S
    moments = star_moment_sequence(c, max_len)
    kappa = moments_to_cumulants(moments)
    checks = []
    for word, value in sorted(kappa.values.items()):
        if not word:
            continue
        expected = Fraction(1) if word in (("c", "c*"), ("c*", "c")) else Fraction(0)
        checks.append(ExactCheck(f"kappa[{''.join(word)}]", expected, value))
    return run_all(checks)


def distribution_identity_check(a: Rational, b: Rational, max_len: int) -> list[ExactCheck]:
    """Mixed *-moments of sqrt(a) T1 + sqrt(b) Y against sqrt(a+b) T1 + sqrt(b) T2*.

    The left side goes through scalar free-convolution (vanishing mixed
    cumulants of the free pair), the right side through the pairing engine;
    the two routes are independent.
    """
    av, bv = as_fraction(a), as_fraction(b)
    if max_len > 6:
        raise UsageError("distribution check capped at length 6")
    sqa, sqb, sqab = sqrt_fraction(av), sqrt_fraction(bv), sqrt_fraction(av + bv)
    if sqa is None or sqb is None or sqab is None:
        raise UsageError("a, b and a+b must be squares of rationals")

    fam_t = MomentSequence(max_len, {
        w: (sqa ** len(w)) * _t1_word_moment(w)
        for w in all_words(("t", "t*"), max_len)})
    fam_y = circular_moments(max_len, letters=("y", "y*"), variance=bv)
    kap_t, kap_y = moments_to_cumulants(fam_t), moments_to_cumulants(fam_y)

    rhs_z = T1.scale(sqab) + T2S.scale(sqb)
    rhs_moments = star_moment_sequence(rhs_z, max_len, letters=("z", "z*"))

    checks = []
    for word in all_words(("z", "z*"), max_len):
        if not word:
            continue
        lhs = Fraction(0)
        for pick in itertools.product("ty", repeat=len(word)):
            mixed = tuple(p + ("*" if w.endswith("*") else "") for p, w in zip(pick, word))
            lhs += free_mixed_moments(kap_t, kap_y, mixed, order_cap=max_len,
                                      as_cumulants=True)
        checks.append(ExactCheck(f"moment[{''.join(word)}]", lhs, rhs_moments[word]))
    return run_all(checks)


@functools.lru_cache(maxsize=None)
def _t1_word_moment(word: tuple[str, ...]) -> Fraction:
    expr = EXPR_ONE
    for l in word:
        expr = expr * (T1S if l.endswith("*") else T1)
    return tau(expr)


def liberation_gradient(t: Rational, csq: Rational, diag: PiecewisePoly = PW_X) -> WordExpr:
    """[xi, S] + [xi*, S*] for the deformation family, as an exact expression."""
    s = st_expr(t, csq, diag)
    xi = xi_expr(t, csq)
    return xi.commutator(s) + xi.adjoint().commutator(s.adjoint())


def liberation_orthogonality(t: Rational, csq: Rational, max_len: int,
                             diag: PiecewisePoly = PW_X) -> list[ExactCheck]:
    """tau(j_t w) = 0 for every *-word w in the deformation pair up to max_len."""
    if max_len > 4:
        raise UsageError("liberation check capped at word length 4")
    j = liberation_gradient(t, csq, diag)
    variables = st_variables(t, csq, diag)
    checks = []
    for word in all_words(("S", "S*"), max_len):
        expr = j
        for l in word:
            expr = expr * variables[l]
        label = "".join(word) if word else "1"
        checks.append(ExactCheck(f"tau(j.{label})", Fraction(0), tau(expr)))
    return run_all(checks)


def statelemma_kernel_check(a: PiecewisePoly, b: PiecewisePoly) -> tuple[Fraction, Fraction]:
    """tau(T2* a T2 b) against the kernel double integral over {t <= x}.

    The left side exercises the pairing engine; the right side is a direct
    exact double integral, independent of the engine.
    """
    lhs = tau(T2S * WordExpr.diagonal(a) * T2 * WordExpr.diagonal(b))
    rhs = _kernel_double_integral(a, b)
    return lhs, rhs


def _kernel_double_integral(a: PiecewisePoly, b: PiecewisePoly) -> Fraction:
    """Integral of a(t) b(x) over the triangle 0 <= t <= x <= 1, exactly.

    Sweeps the common refinement left to right, carrying the accumulated
    a-mass A(x) = integral of a over [0, x] through each cell.
    """
    from .pwpoly import _pantider, _peval, _pmul
    cuts = sorted({lo for lo, _, _ in a.pieces} | {lo for lo, _, _ in b.pieces} | {Fraction(1)})
    total = Fraction(0)
    acc = Fraction(0)  # a-mass accumulated up to the left edge of the cell
    ia = ib = 0
    for lo, hi in zip(cuts, cuts[1:]):
        while a.pieces[ia][1] <= lo:
            ia += 1
        while b.pieces[ib][1] <= lo:
            ib += 1
        ac, bc = a.pieces[ia][2], b.pieces[ib][2]
        fa = _pantider(ac)     # A(x) = acc + fa(x) - fa(lo) on this cell
        fb = _pantider(bc)
        fab = _pantider(_pmul(bc, fa))
        total += (_peval(fab, hi) - _peval(fab, lo)
                  + (acc - _peval(fa, lo)) * (_peval(fb, hi) - _peval(fb, lo)))
        acc += _peval(fa, hi) - _peval(fa, lo)
    return total
