"""Integer model against machine ground truth.

ctypes gives the real two's complement behaviour of the host, which is an
implementation of the C semantics the models claim to encode. norm_* and the
encoding posts must agree with it exactly: exhaustively at width 8, and on a
large random sample at 32 and 64."""

import ctypes
import random

import pytest

from verkit import intmodel as M

CT = {
    ("u", 8): ctypes.c_uint8, ("s", 8): ctypes.c_int8,
    ("u", 32): ctypes.c_uint32, ("s", 32): ctypes.c_int32,
    ("u", 64): ctypes.c_uint64, ("s", 64): ctypes.c_int64,
}


def machine_u(w, x):
    return CT[("u", w)](x).value


def machine_s(w, x):
    return CT[("s", w)](x).value


def test_norm_u8_exhaustive():
    for x in range(-300, 600):
        assert M.norm_u(8, x) == machine_u(8, x)


def test_norm_s8_exhaustive():
    for x in range(-300, 600):
        assert M.norm_s(8, x) == machine_s(8, x)


def test_norm_wide_random():
    rng = random.Random(20260819)
    for _ in range(100000):
        w = rng.choice((32, 64))
        x = rng.randrange(-(1 << (w + 2)), 1 << (w + 2))
        assert M.norm_u(w, x) == machine_u(w, x)
        assert M.norm_s(w, x) == machine_s(w, x)


def test_bits_roundtrip_w8():
    for kind in ("i8", "u8"):
        for pattern in range(256):
            v = M.from_bits(kind, pattern)
            assert M.in_bounds(kind, v)
            assert M.to_bits(kind, v) == pattern


# bitvector-rail reference: operate on patterns the way the SMT ops do

def bv_ref(op, kind, pa, pb):
    w = M.bits(kind)
    mask = (1 << w) - 1
    if op in ("+", "-", "*"):
        r = {"+": pa + pb, "-": pa - pb, "*": pa * pb}[op]
        return r & mask
    if op == "&":
        return pa & pb
    if op == "|":
        return pa | pb
    if op == "^":
        return pa ^ pb
    if op == "<<":
        return (pa << pb) & mask if pb < w else 0
    if op == ">>":
        if M.is_signed(kind):
            sa = M.from_bits(kind, pa)
            return (sa >> pb) & mask if pb < w else (mask if sa < 0 else 0)
        return pa >> pb if pb < w else 0
    if op == "/":
        if M.is_signed(kind):
            a, b = M.from_bits(kind, pa), M.from_bits(kind, pb)
            if b == 0:
                return None
            return M.to_bits(kind, M.trunc_div(a, b))
        return pa // pb if pb else None
    if op == "%":
        if M.is_signed(kind):
            a, b = M.from_bits(kind, pa), M.from_bits(kind, pb)
            if b == 0:
                return None
            return M.to_bits(kind, M.trunc_mod(a, b))
        return pa % pb if pb else None
    raise ValueError(op)


@pytest.mark.parametrize("kind", ["u8", "i8"])
@pytest.mark.parametrize("op", ["+", "-", "*", "&", "|", "^"])
def test_dual_rail_w8_exhaustive(kind, op):
    """Every instance of the combined-model post schema at width 8.

    The wrap post says: value(bvop(a, b)) == norm(value(a) op value(b)).
    The checked post says: when the exact result is in bounds, it equals
    value(bvop(a, b)); this is what lets the VC assume the integer-rail
    equation after discharging the overflow goal."""
    for pa in range(256):
        for pb in range(256):
            a, b = M.from_bits(kind, pa), M.from_bits(kind, pb)
            pr = bv_ref(op, kind, pa, pb)
            wrapped = M.eval_binop(op, kind, a, b, wrap=True)
            assert M.to_bits(kind, wrapped) == pr
            if op in ("&", "|", "^"):
                continue
            exact = {"+": a + b, "-": a - b, "*": a * b}[op]
            if M.in_bounds(kind, exact):
                assert M.from_bits(kind, pr) == exact
                assert M.eval_binop(op, kind, a, b, wrap=False) == exact
            else:
                with pytest.raises(M.EvalTrap):
                    M.eval_binop(op, kind, a, b, wrap=False)


@pytest.mark.parametrize("kind", ["u8", "i8"])
def test_division_w8_exhaustive(kind):
    for pa in range(256):
        for pb in range(256):
            a, b = M.from_bits(kind, pa), M.from_bits(kind, pb)
            for op in ("/", "%"):
                pr = bv_ref(op, kind, pa, pb)
                if b == 0:
                    assert pr is None
                    with pytest.raises(M.EvalTrap):
                        M.eval_binop(op, kind, a, b, wrap=False)
                    continue
                if kind == "i8" and a == -128 and b == -1:
                    with pytest.raises(M.EvalTrap):
                        M.eval_binop(op, kind, a, b, wrap=False)
                    continue
                got = M.eval_binop(op, kind, a, b, wrap=False)
                assert M.to_bits(kind, got) == pr
                # unsigned division agrees with the Euclidean integer post
                if kind == "u8":
                    assert got == (a // b if op == "/" else a % b)


@pytest.mark.parametrize("kind", ["u8", "i8"])
def test_shift_w8_exhaustive(kind):
    for pa in range(256):
        a = M.from_bits(kind, pa)
        for sh in range(8):
            pr = bv_ref("<<", kind, pa, sh)
            wrapped = M.eval_binop("<<", kind, a, sh, wrap=True)
            assert M.to_bits(kind, wrapped) == pr
            exact = a << sh if a >= 0 else None
            if exact is not None and M.in_bounds(kind, exact):
                # literal-shift integer post: z == a * 2^sh
                assert M.from_bits(kind, pr) == exact
            if a >= 0:
                prr = bv_ref(">>", kind, pa, sh)
                got = M.eval_binop(">>", kind, a, sh, wrap=False)
                assert got == a >> sh == a // (1 << sh)
                assert M.to_bits(kind, got) == prr


def test_unary_w8_exhaustive():
    for kind in ("u8", "i8"):
        for pa in range(256):
            a = M.from_bits(kind, pa)
            assert M.to_bits(kind, M.eval_unop("~", kind, a, False)) \
                == (~pa) & 0xFF
            wrapped = M.eval_unop("-", kind, a, wrap=True)
            assert M.to_bits(kind, wrapped) == (-pa) & 0xFF
            if M.in_bounds(kind, -a):
                assert M.eval_unop("-", kind, a, wrap=False) == -a
            else:
                with pytest.raises(M.EvalTrap):
                    M.eval_unop("-", kind, a, wrap=False)


def test_dual_rail_wide_random():
    rng = random.Random(99)
    kinds = ("u32", "i32", "u64", "i64")
    ops = ("+", "-", "*", "&", "|", "^", "/", "%")
    for _ in range(100000):
        kind = rng.choice(kinds)
        op = rng.choice(ops)
        w = M.bits(kind)
        pa = rng.randrange(1 << w)
        pb = rng.randrange(1 << w)
        a, b = M.from_bits(kind, pa), M.from_bits(kind, pb)
        pr = bv_ref(op, kind, pa, pb)
        if op in ("/", "%"):
            if b == 0 or (M.is_signed(kind) and a == -(1 << (w - 1))
                          and b == -1):
                continue
            got = M.eval_binop(op, kind, a, b, wrap=False)
            assert M.to_bits(kind, got) == pr
            continue
        wrapped = M.eval_binop(op, kind, a, b, wrap=True)
        assert M.to_bits(kind, wrapped) == pr
        ref = CT[("s" if M.is_signed(kind) else "u", w)]
        if op == "+":
            assert M.to_bits(kind, wrapped) == M.to_bits(kind,
                                                         ref(pa + pb).value)


def test_cast_semantics():
    rng = random.Random(7)
    for _ in range(20000):
        src = rng.choice(("u8", "i8", "u32", "i32", "u64", "i64"))
        dst = rng.choice(("u8", "i8", "u32", "i32", "u64", "i64"))
        a = M.from_bits(src, rng.randrange(1 << M.bits(src)))
        wrapped = M.eval_cast(dst, a, wrap=True)
        sch = "s" if M.is_signed(dst) else "u"
        assert wrapped == CT[(sch, M.bits(dst))](a).value
        if M.in_bounds(dst, a):
            assert M.eval_cast(dst, a, wrap=False) == a
        else:
            with pytest.raises(M.EvalTrap):
                M.eval_cast(dst, a, wrap=False)


def test_model_flavours():
    assert M.eval_binop("+", "u8", 200, 100, False, model="math") == 300
    assert M.eval_binop("+", "u8", 200, 100, False, model="modulo") == 44
    with pytest.raises(M.EvalTrap):
        M.eval_binop("+", "u8", 200, 100, False, model="defensive")
    with pytest.raises(M.EvalTrap):
        M.eval_binop("+", "u8", 200, 100, False, model="combined")
    assert M.eval_binop("+", "u8", 200, 100, True) == 44
