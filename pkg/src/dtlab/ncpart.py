"""Non-crossing partition lattice, Moebius inversion, moment/cumulant transforms.

The combinatorial substrate for all scalar cumulant work: enumeration of
NC(n) and of non-crossing pairings, the Moebius function of lattice
intervals via Kreweras complements and signed Catalan numbers, and the
moment <-> free-cumulant transforms on *-words.  Everything is exact over
``fractions.Fraction``.

Convention: a word is a tuple of letters; cumulants are indexed by words,
and a diagonal insertion attaches to the left factor of the following
argument (the tensor-notation convention fixed once for the whole package).
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import UsageError

ENUMERATION_CAP = 14   # Catalan growth makes larger ground sets impractical
TRANSFORM_CAP = 12

Word = tuple[str, ...]


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def _is_noncrossing(blocks: Sequence[Sequence[int]]) -> bool:
    # a < b < c < d with {a,c} and {b,d} in different blocks is a crossing
    for (i, bi), (j, bj) in itertools.combinations(enumerate(blocks), 2):
        for a, c in itertools.combinations(bi, 2):
            for b, d in itertools.combinations(bj, 2):
                if a < b < c < d or b < a < d < c:
                    return False
    return True


@dataclass(frozen=True)
class NCPartition:
    """A non-crossing partition of {1..n}; blocks sorted, ordered by minimum."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0]))
        object.__setattr__(self, "blocks", blocks)
        covered = sorted(itertools.chain.from_iterable(blocks))
        if covered != list(range(1, self.n + 1)):
            raise UsageError(f"blocks do not partition 1..{self.n}: {blocks}")
        if not _is_noncrossing(blocks):
            raise UsageError(f"crossing partition: {blocks}")

    @staticmethod
    def singletons(n: int) -> "NCPartition":
        return NCPartition(n, tuple((i,) for i in range(1, n + 1)))

    @staticmethod
    def one_block(n: int) -> "NCPartition":
        return NCPartition(n, (tuple(range(1, n + 1)),))

    def num_blocks(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class NCPairing:
    """A non-crossing pair partition of {1..n} (n even)."""

    n: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if any(len(p) != 2 for p in self.pairs):
            raise UsageError("pairing blocks must have size exactly 2")
        part = NCPartition(self.n, self.pairs)  # reuse validation
        object.__setattr__(self, "pairs", part.blocks)


def _gen_nc(elems: tuple[int, ...]) -> Iterable[tuple[tuple[int, ...], ...]]:
    """All non-crossing partitions of an ordered ground set.

    The block of the first element is chosen; its members cut the rest into
    gaps that are partitioned independently, so no crossing candidate is
    ever generated.
    """
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for size in range(len(rest) + 1):
        for comb in itertools.combinations(range(len(rest)), size):
            block = (first,) + tuple(rest[i] for i in comb)
            gaps = []
            prev = 0
            for i in comb:
                gaps.append(rest[prev:i])
                prev = i + 1
            gaps.append(rest[prev:])
            for parts in itertools.product(*(tuple(_gen_nc(g)) for g in gaps)):
                yield (block,) + tuple(itertools.chain.from_iterable(parts))


@functools.lru_cache(maxsize=ENUMERATION_CAP)
def _nc_cached(n: int) -> tuple[NCPartition, ...]:
    parts = [NCPartition(n, blocks) for blocks in _gen_nc(tuple(range(1, n + 1)))]
    parts.sort(key=lambda p: p.blocks)
    return tuple(parts)


def enumerate_nc_partitions(n: int) -> list[NCPartition]:
    """All of NC(n) in lexicographic block-structure order; |NC(n)| = Catalan(n)."""
    if not 1 <= n <= ENUMERATION_CAP:
        raise UsageError(f"enumeration supported for 1 <= n <= {ENUMERATION_CAP}, got {n}")
    return list(_nc_cached(n))


def _gen_pairings(elems: tuple[int, ...]) -> Iterable[tuple[tuple[int, int], ...]]:
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for j in range(0, len(rest), 2):
        inner, outer = rest[:j], rest[j + 1:]
        for pi in _gen_pairings(inner):
            for po in _gen_pairings(outer):
                yield ((first, rest[j]),) + pi + po


def enumerate_nc_pairings(n: int) -> list[NCPairing]:
    """Non-crossing pairings of {1..n}: empty for odd n, Catalan(n/2) otherwise."""
    if n < 0:
        raise UsageError("ground set size must be nonnegative")
    if n % 2:
        return []
    if n > ENUMERATION_CAP * 2:
        raise UsageError(f"pairing enumeration capped at n = {2 * ENUMERATION_CAP}")
    pairings = [NCPairing(n, ps) for ps in _gen_pairings(tuple(range(1, n + 1)))]
    pairings.sort(key=lambda p: p.pairs)
    return pairings


def refines(sigma: NCPartition, pi: NCPartition) -> bool:
    """True iff every block of sigma lies inside a block of pi."""
    if sigma.n != pi.n:
        return False
    owner = {}
    for i, block in enumerate(pi.blocks):
        for x in block:
            owner[x] = i
    return all(len({owner[x] for x in b}) == 1 for b in sigma.blocks)


def kreweras(p: NCPartition) -> NCPartition:
    """Kreweras complement, via the permutation model of NC(n).

    Blocks traversed cyclically in increasing order give a permutation a;
    the cycles of a^{-1} followed by the full cycle are the complement.
    """
    n = p.n
    nxt = {}
    for block in p.blocks:
        for i, x in enumerate(block):
            nxt[x] = block[(i + 1) % len(block)]
    inv = {v: k for k, v in nxt.items()}
    gamma = lambda i: i % n + 1
    comp = {i: inv[gamma(i)] for i in range(1, n + 1)}
    seen: set[int] = set()
    blocks = []
    for start in range(1, n + 1):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        x = comp[start]
        while x != start:
            cyc.append(x)
            seen.add(x)
            x = comp[x]
        blocks.append(tuple(sorted(cyc)))
    return NCPartition(n, tuple(blocks))


def _mu_full(m: int) -> int:
    """Moebius function of the full interval of NC(m): (-1)^(m-1) Catalan(m-1)."""
    return (-1) ** (m - 1) * catalan(m - 1)


def _relabel(block: Sequence[int], sub_blocks: Iterable[Sequence[int]]) -> NCPartition:
    pos = {x: i + 1 for i, x in enumerate(sorted(block))}
    return NCPartition(len(block), tuple(tuple(pos[x] for x in b) for b in sub_blocks))


def moebius_nc(sigma: NCPartition, pi: NCPartition) -> Fraction:
    """Moebius function of the interval [sigma, pi] in NC(n).

    Factorizes [sigma, pi] over the blocks of pi; each factor [sigma|_V, 1_V]
    decomposes through the Kreweras complement of sigma|_V into full
    intervals, contributing signed Catalan numbers.
    """
    if sigma.n != pi.n or not refines(sigma, pi):
        raise UsageError("moebius_nc needs sigma refining pi on the same ground set")
    total = 1
    for block in pi.blocks:
        inner = [b for b in sigma.blocks if b[0] in block]
        restricted = _relabel(block, inner)
        for comp_block in kreweras(restricted).blocks:
            total *= _mu_full(len(comp_block))
    return Fraction(total)


def mu_to_top(pi: NCPartition) -> Fraction:
    """Moebius value of [pi, one_block]."""
    total = 1
    for comp_block in kreweras(pi).blocks:
        total *= _mu_full(len(comp_block))
    return Fraction(total)


# -- moment <-> cumulant transforms ------------------------------------------


@dataclass
class MomentSequence:
    """Values of a multilinear functional on words of length <= order.

    ``values`` maps letter tuples to exact rationals; the empty word carries
    the unit value 1.  Used both for moments and for cumulants (the transforms
    below preserve the indexing).
    """

    order: int
    values: dict[Word, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        self.values = {tuple(w): as_rational(v) for w, v in self.values.items()}
        self.values.setdefault((), Fraction(1))
        if self.values[()] != 1:
            raise UsageError("the empty word must carry value 1")

    def alphabet(self) -> tuple[str, ...]:
        letters = sorted({l for w in self.values for l in w})
        return tuple(letters)

    def __getitem__(self, word: Sequence[str]) -> Fraction:
        key = tuple(word)
        if key not in self.values:
            raise UsageError(f"missing value for word {key}")
        return self.values[key]


def as_rational(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise UsageError(f"moment values must be exact rationals, got {type(v).__name__}")


def all_words(alphabet: Sequence[str], order: int) -> list[Word]:
    out: list[Word] = [()]
    for k in range(1, order + 1):
        out.extend(itertools.product(alphabet, repeat=k))
    return out


def _restrict(word: Word, block: Sequence[int]) -> Word:
    return tuple(word[i - 1] for i in block)


@functools.lru_cache(maxsize=TRANSFORM_CAP)
def _partitions_with_mu(n: int) -> tuple[tuple[NCPartition, Fraction], ...]:
    return tuple((p, mu_to_top(p)) for p in enumerate_nc_partitions(n))


def moments_to_cumulants(m: MomentSequence) -> MomentSequence:
    """Free cumulants by Moebius inversion over NC(|w|), word by word."""
    if m.order > TRANSFORM_CAP:
        raise UsageError(f"transform capped at order {TRANSFORM_CAP}")
    alphabet = m.alphabet()
    out: dict[Word, Fraction] = {}
    for k in range(1, m.order + 1):
        pmu = _partitions_with_mu(k)
        for word in itertools.product(alphabet, repeat=k):
            acc = Fraction(0)
            for p, mu in pmu:
                prod = mu
                for block in p.blocks:
                    prod *= m[_restrict(word, block)]
                    if prod == 0:
                        break
                acc += prod
            out[word] = acc
    return MomentSequence(m.order, out)


def cumulants_to_moments(k: MomentSequence) -> MomentSequence:
    """Forward moment formula: sum over NC(|w|) of block-cumulant products."""
    if k.order > TRANSFORM_CAP:
        raise UsageError(f"transform capped at order {TRANSFORM_CAP}")
    alphabet = k.alphabet()
    out: dict[Word, Fraction] = {}
    for n in range(1, k.order + 1):
        parts = enumerate_nc_partitions(n)
        for word in itertools.product(alphabet, repeat=n):
            acc = Fraction(0)
            for p in parts:
                prod = Fraction(1)
                for block in p.blocks:
                    prod *= k[_restrict(word, block)]
                    if prod == 0:
                        break
                acc += prod
            out[word] = acc
    return MomentSequence(k.order, out)


MIXED_MOMENT_CAP = 10


def free_mixed_moments(fam_a: MomentSequence, fam_b: MomentSequence,
                       word: Sequence[str], order_cap: int = MIXED_MOMENT_CAP,
                       as_cumulants: bool = False) -> Fraction:
    """Mixed moment of two free families from their separate moment data.

    Freeness kills mixed cumulants, so the moment is the sum over
    non-crossing partitions whose blocks each stay inside one family,
    of products of that family's cumulants.  Pass ``as_cumulants=True`` when
    the sequences already hold cumulants (saves re-inverting per call).
    """
    word = tuple(word)
    if order_cap > MIXED_MOMENT_CAP:
        raise UsageError(f"mixed-moment cap is {MIXED_MOMENT_CAP}")
    if len(word) > order_cap:
        raise UsageError(f"word longer than cap {order_cap}")
    alpha_a, alpha_b = set(fam_a.alphabet()), set(fam_b.alphabet())
    if alpha_a & alpha_b:
        raise UsageError("family alphabets must be disjoint")
    fam_of = {}
    for l in word:
        if l in alpha_a:
            fam_of[l] = 0
        elif l in alpha_b:
            fam_of[l] = 1
        else:
            raise UsageError(f"letter {l!r} belongs to neither family")
    if not word:
        return Fraction(1)
    if as_cumulants:
        kappa = (fam_a, fam_b)
    else:
        kappa = (moments_to_cumulants(fam_a), moments_to_cumulants(fam_b))
    acc = Fraction(0)
    for p in enumerate_nc_partitions(len(word)):
        prod = Fraction(1)
        for block in p.blocks:
            fams = {fam_of[word[i - 1]] for i in block}
            if len(fams) != 1:
                prod = Fraction(0)
                break
            prod *= kappa[fams.pop()][_restrict(word, block)]
            if prod == 0:
                break
        acc += prod
    return acc


# -- standard scalar families -------------------------------------------------


def semicircular_moments(order: int, variance: Fraction = Fraction(1), letter: str = "s") -> MomentSequence:
    """Moments of a centered semicircular element of the given variance."""
    kappa = {(): Fraction(1)}
    for w in all_words((letter,), order):
        if w:
            kappa[w] = as_rational(variance) if len(w) == 2 else Fraction(0)
    return cumulants_to_moments(MomentSequence(order, kappa))


def circular_moments(order: int, letters: tuple[str, str] = ("c", "c*"),
                     variance: Fraction = Fraction(1)) -> MomentSequence:
    """*-moments of a standard circular element: only kappa_2(c,c*) = kappa_2(c*,c)."""
    a, b = letters
    v = as_rational(variance)
    kappa = {(): Fraction(1)}
    for w in all_words(letters, order):
        if w:
            kappa[w] = v if w in ((a, b), (b, a)) else Fraction(0)
    return cumulants_to_moments(MomentSequence(order, kappa))
