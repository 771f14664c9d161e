"""Byte-level block memory model, one instance per region.

A region owns an uninterpreted pointer sort and a small algebra over it:

  shift(p, i)      pointer i elements further
  sub(p, q)        element distance, meaningful within one block
  same_block(p, q) allocation predicate for comparisons and differences
  offset_min(p)    lowest valid shift from p (0 when p is at block start:
                   the value is -offset(p))
  offset_max(p)    highest valid shift from p (size - offset(p) - 1)
  null             the one null pointer of the region

Dereferences demand offset_min(p) <= 0 <= offset_max(p). Relational pointer
comparisons and differences demand same_block and are then translated
through sub. Equality needs no side condition: within a region, pointer
equality is sort equality.

The intended interpretation is pointers as (block, offset) pairs; the
axioms below are exactly the facts of that structure that the goals need,
kept deliberately small and match-friendly (the sub/shift laws are
unguarded). test_memmodel checks every axiom against the concrete
interpretation over small domains."""

from __future__ import annotations

from dataclasses import dataclass

from . import smt as S

# block size stays below 2^63 so that element differences of in-block
# pointers always fit a signed 64-bit integer
MAX_BLOCK_SPAN = (1 << 63) - 2


class RegionEnc:
    """Declarations and axioms of one region."""

    def __init__(self, name: str, value_sort: S.Sort):
        self.name = name
        self.sort = S.USort("Ptr$%s" % name)
        self.value_sort = value_sort
        self.mem_sort = S.ArraySort(self.sort, value_sort)
        p = (self.sort,)
        self.shift = S.FunDecl("shift$%s" % name, (self.sort, S.INT),
                               self.sort)
        self.sub = S.FunDecl("sub$%s" % name, p + p, S.INT)
        self.same_block = S.FunDecl("same_block$%s" % name, p + p, S.BOOL)
        self.offset_min = S.FunDecl("offset_min$%s" % name, p, S.INT)
        self.offset_max = S.FunDecl("offset_max$%s" % name, p, S.INT)
        self.null = S.Const("null$%s" % name, self.sort)

    def decls(self):
        return [self.shift, self.sub, self.same_block,
                self.offset_min, self.offset_max]

    def axioms(self) -> list[tuple[str, S.Term]]:
        n = self.name
        p = S.Const("p!", self.sort)
        q = S.Const("q!", self.sort)
        r = S.Const("r!", self.sort)
        i = S.Const("i!", S.INT)
        j = S.Const("j!", S.INT)
        sh, sub, sb = self.shift, self.sub, self.same_block
        omin, omax = self.offset_min, self.offset_max
        # Every quantifier carries a curated trigger. The instantiation
        # only ever rewrites a composed term into smaller pieces (or adds a
        # ground atom), so saturation terminates; without these the solver
        # invents triggers like {shift(p,i)} for the offset axioms and
        # matching runs away.
        #
        # There is deliberately no shift-composition axiom. sub_reconstruct
        # equates shift(q, sub(p, q)) with p, which makes every flat shift
        # term congruent to a nested one, and a composition axiom then
        # rewrites those into fresh terms without bound (measured: ~100k
        # instances where every other axiom stays under a thousand).
        # Composition facts are recovered through the affine sub laws.
        ax = [
            ("shift_zero",
             S.forall([p], S.eq(sh(p, S.IntLit(0)), p),
                      [sh(p, S.IntLit(0))])),
            ("sub_shift",
             S.forall([p, i], S.eq(sub(sh(p, i), p), i),
                      [sub(sh(p, i), p)])),
            ("sub_shift_r",
             S.forall([p, i], S.eq(sub(p, sh(p, i)),
                                   S.Op("-", (i,), S.INT)),
                      [sub(p, sh(p, i))])),
            # difference is affine in shifts of either argument; sound
            # unguarded because sub is total (cross-block values are the
            # plain address difference in the reference model)
            ("sub_shift_l2",
             S.forall([p, q, i], S.eq(sub(sh(p, i), q),
                                      S.add(sub(p, q), i)),
                      [sub(sh(p, i), q)])),
            ("sub_shift_r2",
             S.forall([p, q, i], S.eq(sub(p, sh(q, i)),
                                      S.sub(sub(p, q), i)),
                      [sub(p, sh(q, i))])),
            ("sub_self",
             S.forall([p], S.eq(sub(p, p), S.IntLit(0)),
                      [sub(p, p)])),
            ("sub_reconstruct",
             S.forall([p, q], S.implies(sb(p, q),
                                        S.eq(sh(q, sub(p, q)), p)),
                      [sub(p, q)])),
            ("same_block_refl",
             S.forall([p], sb(p, p), [sb(p, p)])),
            ("same_block_sym",
             S.forall([p, q], S.implies(sb(p, q), sb(q, p)),
                      [sb(p, q)])),
            ("same_block_trans",
             S.forall([p, q, r], S.implies(S.conj(sb(p, q), sb(q, r)),
                                           sb(p, r)),
                      [(sb(p, q), sb(q, r))])),
            ("same_block_shift",
             S.forall([p, i], sb(p, sh(p, i)), [sh(p, i)])),
            ("offset_min_shift",
             S.forall([p, i], S.eq(omin(sh(p, i)), S.sub(omin(p), i)),
                      [omin(sh(p, i))])),
            ("offset_max_shift",
             S.forall([p, i], S.eq(omax(sh(p, i)), S.sub(omax(p), i)),
                      [omax(sh(p, i))])),
            ("block_span",
             S.forall([p], S.le(S.sub(omax(p), omin(p)),
                                S.IntLit(MAX_BLOCK_SPAN)),
                      [omax(p), omin(p)])),
            ("null_bounds",
             S.conj(S.eq(omin(self.null), S.IntLit(0)),
                    S.eq(omax(self.null), S.IntLit(-1)))),
        ]
        return [("%s$%s" % (name, n), t) for name, t in ax]

    # formula builders

    def valid_one(self, p: S.Term) -> S.Term:
        return S.conj(S.le(self.offset_min(p), S.IntLit(0)),
                      S.le(S.IntLit(0), self.offset_max(p)))

    def valid_range(self, p: S.Term, lo: S.Term, hi: S.Term) -> S.Term:
        fits = S.conj(S.le(self.offset_min(p), lo),
                      S.le(hi, self.offset_max(p)))
        return S.disj(S.gt(lo, hi), fits)

    def in_footprint(self, p: S.Term, base: S.Term, lo: S.Term,
                     hi: S.Term) -> S.Term:
        """p points into base[lo..hi]."""
        d = self.sub(p, base)
        return S.conj(self.same_block(p, base),
                      S.le(lo, d), S.le(d, hi))


# ------------------------------------------------------ concrete semantics

@dataclass(frozen=True)
class CPtr:
    """Concrete pointer of the intended interpretation: a block identity
    plus an element offset. Block 0 with size 0 is the null block."""
    block: int
    offset: int


class ConcreteRegion:
    """Finite instance of the region structure, for checking the axioms
    and for the interpreter. Blocks live at separated base addresses
    (overridable, so tests can randomize them); `sub` is the plain address
    difference, which makes it total — programs must still check
    same_block before relying on it."""

    def __init__(self, sizes: dict[int, int], bases: dict = None):
        self.sizes = dict(sizes)
        self.sizes.setdefault(0, 0)   # null block
        self.bases = dict(bases) if bases else {}

    @property
    def null(self) -> CPtr:
        return CPtr(0, 0)

    def addr(self, p: CPtr) -> int:
        return self.bases.get(p.block, p.block << 40) + p.offset

    def shift(self, p: CPtr, i: int) -> CPtr:
        return CPtr(p.block, p.offset + i)

    def sub(self, p: CPtr, q: CPtr) -> int:
        return self.addr(p) - self.addr(q)

    def same_block(self, p: CPtr, q: CPtr) -> bool:
        return p.block == q.block

    def offset_min(self, p: CPtr) -> int:
        return -p.offset

    def offset_max(self, p: CPtr) -> int:
        return self.sizes[p.block] - p.offset - 1

    def valid_one(self, p: CPtr) -> bool:
        return self.offset_min(p) <= 0 <= self.offset_max(p)

    def valid_range(self, p: CPtr, lo: int, hi: int) -> bool:
        if lo > hi:
            return True
        return self.offset_min(p) <= lo and hi <= self.offset_max(p)
