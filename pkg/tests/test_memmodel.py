"""Memory model axioms against the intended interpretation.

Every axiom the encoder emits is a fact about pointers as (block, offset)
pairs. These tests enumerate small concrete domains and check each axiom
instance, so an axiom that is wrong about the structure (and could make the
solver prove false things) fails here rather than silently strengthening
the prover."""

import itertools

from verkit.memmodel import ConcreteRegion, CPtr, RegionEnc, MAX_BLOCK_SPAN
from verkit import smt as S

SIZES = {0: 0, 1: 1, 2: 3, 3: 4}
OFFSETS = range(-2, 6)
SHIFTS = range(-3, 4)


def pointers(region):
    for b in region.sizes:
        for o in OFFSETS:
            yield CPtr(b, o)


def test_shift_laws():
    r = ConcreteRegion(SIZES)
    for p in pointers(r):
        assert r.shift(p, 0) == p
        for i in SHIFTS:
            for j in SHIFTS:
                assert r.shift(r.shift(p, i), j) == r.shift(p, i + j)


def test_sub_laws():
    r = ConcreteRegion(SIZES)
    for p in pointers(r):
        assert r.sub(p, p) == 0
        for i in SHIFTS:
            assert r.sub(r.shift(p, i), p) == i
            assert r.sub(p, r.shift(p, i)) == -i
        for q in pointers(r):
            if r.same_block(p, q):
                # reconstruction: q + (p - q) is p again
                assert r.shift(q, r.sub(p, q)) == p


def test_sub_total_affine():
    """sub is total (address difference), so the affine laws hold without
    a same-block guard. Base placement must not matter."""
    for bases in (None, {0: 0, 1: 977, 2: -4000, 3: 123456}):
        r = ConcreteRegion(SIZES, bases)
        pts = list(pointers(r))
        for p, q in itertools.product(pts, pts):
            assert r.sub(p, q) == -r.sub(q, p)
            for i in SHIFTS:
                assert r.sub(r.shift(p, i), q) == r.sub(p, q) + i
                assert r.sub(p, r.shift(q, i)) == r.sub(p, q) - i
            if r.same_block(p, q):
                assert r.sub(p, q) == p.offset - q.offset


def test_same_block_laws():
    r = ConcreteRegion(SIZES)
    pts = list(pointers(r))
    for p in pts:
        assert r.same_block(p, p)
        for i in SHIFTS:
            assert r.same_block(p, r.shift(p, i))
    for p, q in itertools.product(pts, pts):
        assert r.same_block(p, q) == r.same_block(q, p)
    for p, q, s in itertools.product(pts[:12], pts[:12], pts[:12]):
        if r.same_block(p, q) and r.same_block(q, s):
            assert r.same_block(p, s)


def test_offset_laws():
    r = ConcreteRegion(SIZES)
    for p in pointers(r):
        for i in SHIFTS:
            assert r.offset_min(r.shift(p, i)) == r.offset_min(p) - i
            assert r.offset_max(r.shift(p, i)) == r.offset_max(p) - i
        assert r.offset_max(p) - r.offset_min(p) <= MAX_BLOCK_SPAN
        # size recovered: max - min + 1 == block size
        assert r.offset_max(p) - r.offset_min(p) + 1 == r.sizes[p.block]


def test_null_bounds():
    r = ConcreteRegion(SIZES)
    assert r.offset_min(r.null) == 0
    assert r.offset_max(r.null) == -1
    assert not r.valid_one(r.null)


def test_validity_matches_access():
    """valid_one(p) iff reading one element at p stays inside the block."""
    r = ConcreteRegion(SIZES)
    for p in pointers(r):
        inside = 0 <= p.offset < r.sizes[p.block]
        assert r.valid_one(p) == inside
        for lo in range(-2, 4):
            for hi in range(-2, 4):
                want = all(0 <= p.offset + k < r.sizes[p.block]
                           for k in range(lo, hi + 1))
                assert r.valid_range(p, lo, hi) == want


def test_axiom_terms_well_sorted():
    """The emitted axiom terms elaborate and mention only region symbols."""
    enc = RegionEnc("r0", S.INT)
    names = set()
    for name, ax in enc.axioms():
        assert ax.sort == S.BOOL
        names.add(name)
        for sym in S.fun_symbols(ax):
            assert sym.endswith("$r0") or sym in ("", "ite"), sym
    assert "block_span$r0" in names
    assert "sub_shift_l2$r0" in names
    assert "sub_shift_r2$r0" in names
    # no composition axiom: it loops against sub_reconstruct (see encoder)
    assert "shift_shift$r0" not in names
    sx = S.to_sexpr(enc.axioms()[0][1])
    assert sx.startswith("(forall ")


def test_regions_do_not_share_symbols():
    a, b = RegionEnc("a", S.INT), RegionEnc("b", S.INT)
    asyms = {d.name for d in a.decls()}
    bsyms = {d.name for d in b.decls()}
    assert not (asyms & bsyms)
    assert a.sort != b.sort
