"""Machine integer models.

Four models govern how machine arithmetic is encoded and which safety
obligations arise:

  math       unbounded integers, no overflow checks, wrap ops are plain ops
  defensive  bounded integers on the integer rail, every non-wrap op proves
             its result in bounds; bitwise ops become uninterpreted
  modulo     every op is reduced modulo 2^w, nothing is checked
  combined   dual rail: every machine value carries both a bitvector and an
             integer image, linked through to_int; arithmetic facts live on
             the integer rail, bitwise ops on the bitvector rail

The concrete functions here (norm_u, norm_s, eval_binop, ...) are the
reference semantics. The encoding posts emitted by the VC generator are
schema instances of exactly these functions, which is what the model tests
check bit-for-bit at width 8 and randomly at 32/64."""

from __future__ import annotations

from typing import Optional

from . import smt as S
from .sema import KIND_BITS, SIGNED_KINDS, kind_range

MODELS = ("math", "defensive", "modulo", "combined")

_BV = {8: S.BV8, 32: S.BV32, 64: S.BV64}


def bits(kind: str) -> int:
    return KIND_BITS[kind]


def is_signed(kind: str) -> bool:
    return kind in SIGNED_KINDS


def bvsort(kind: str) -> S.BVSort:
    return _BV[KIND_BITS[kind]]


# ------------------------------------------------------------ concrete layer

def norm_u(w: int, x: int) -> int:
    return x % (1 << w)


def norm_s(w: int, x: int) -> int:
    half = 1 << (w - 1)
    return (x + half) % (1 << w) - half


def norm(kind: str, x: int) -> int:
    w = KIND_BITS[kind]
    return norm_s(w, x) if kind in SIGNED_KINDS else norm_u(w, x)


def in_bounds(kind: str, x: int) -> bool:
    lo, hi = kind_range(kind)
    return lo <= x <= hi


def to_bits(kind: str, value: int) -> int:
    """Bit pattern (as an unsigned int) of a machine value."""
    return value % (1 << KIND_BITS[kind])


def from_bits(kind: str, pattern: int) -> int:
    """Machine value designated by a bit pattern."""
    return norm(kind, pattern)


def trunc_div(a: int, b: int) -> int:
    """C division: truncate toward zero."""
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def trunc_mod(a: int, b: int) -> int:
    return a - b * trunc_div(a, b)


class EvalTrap(Exception):
    """A checked operation left its domain (overflow, division by zero,
    out-of-range shift)."""

    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


def eval_binop(op: str, kind: str, a: int, b: int, wrap: bool,
               model: str = "combined") -> int:
    """Reference semantics of `a op b` at machine kind `kind`.

    Raises EvalTrap where the model attaches a safety obligation that the
    given operands violate. Under `math` nothing is bounded; under `modulo`
    everything wraps silently."""
    w = KIND_BITS[kind]
    if op in ("/", "%"):
        if b == 0:
            raise EvalTrap("division by zero")
        # INT_MIN / -1 overflows, and so the remainder is undefined with it
        if kind in SIGNED_KINDS and model != "math" \
                and a == -(1 << (w - 1)) and b == -1:
            if model == "modulo":
                return norm(kind, trunc_div(a, b)) if op == "/" else 0
            raise EvalTrap("division overflow")
        return trunc_div(a, b) if op == "/" else trunc_mod(a, b)
    if op in ("<<", ">>"):
        if not 0 <= b < w:
            raise EvalTrap("shift amount out of range")
        if op == ">>":
            if a < 0:
                raise EvalTrap("right shift of a negative value")
            return a >> b
        r = a << b
    elif op == "+":
        r = a + b
    elif op == "-":
        r = a - b
    elif op == "*":
        r = a * b
    elif op in ("&", "|", "^"):
        pa, pb = to_bits(kind, a), to_bits(kind, b)
        p = {"&": pa & pb, "|": pa | pb, "^": pa ^ pb}[op]
        return from_bits(kind, p)
    else:
        raise ValueError("bad op %r" % op)
    if model == "math":
        return r
    if wrap or model == "modulo":
        return norm(kind, r)
    if not in_bounds(kind, r):
        raise EvalTrap("arithmetic overflow")
    return r


def eval_unop(op: str, kind: str, a: int, wrap: bool,
              model: str = "combined") -> int:
    if op == "~":
        return from_bits(kind, ~to_bits(kind, a))
    if op == "-":
        r = -a
        if model == "math":
            return r
        if wrap or model == "modulo":
            return norm(kind, r)
        if not in_bounds(kind, r):
            raise EvalTrap("negation overflow")
        return r
    raise ValueError("bad op %r" % op)


def eval_cast(dst: str, a: int, wrap: bool, model: str = "combined") -> int:
    if model == "math":
        return a
    if wrap or model == "modulo":
        return norm(dst, a)
    if not in_bounds(dst, a):
        raise EvalTrap("lossy conversion")
    return a


# ------------------------------------------------------------ SMT encoding

_BVOP = {"+": "bvadd", "-": "bvsub", "*": "bvmul",
         "&": "bvand", "|": "bvor", "^": "bvxor", "<<": "bvshl"}


class IntEnc:
    """Encoding helpers for one unit; caches the per-kind declarations."""

    def __init__(self, model: str = "combined"):
        if model not in MODELS:
            raise ValueError("unknown integer model %r" % model)
        self.model = model
        self._to_int: dict[str, S.FunDecl] = {}
        self._of_int: dict[str, S.FunDecl] = {}
        self._ubit: dict[tuple[str, str], S.FunDecl] = {}
        self.used_kinds: set[str] = set()
        self.used_ubit: set[tuple[str, str]] = set()

    @property
    def dual(self) -> bool:
        return self.model == "combined"

    def to_int(self, kind: str) -> S.FunDecl:
        self.used_kinds.add(kind)
        if kind not in self._to_int:
            self._to_int[kind] = S.FunDecl(
                "to_int$%s" % kind, (bvsort(kind),), S.INT)
        return self._to_int[kind]

    def of_int(self, kind: str) -> S.FunDecl:
        self.used_kinds.add(kind)
        if kind not in self._of_int:
            self._of_int[kind] = S.FunDecl(
                "of_int$%s" % kind, (S.INT,), bvsort(kind))
        return self._of_int[kind]

    def ubit_fn(self, op: str, kind: str) -> S.FunDecl:
        """Uninterpreted stand-in for a bitwise op outside the combined
        model."""
        key = (op, kind)
        self.used_ubit.add(key)
        if key not in self._ubit:
            name = {"&": "band", "|": "bor", "^": "bxor", "~": "bnot"}[op]
            arity = 1 if op == "~" else 2
            self._ubit[key] = S.FunDecl("%s$%s" % (name, kind),
                                        (S.INT,) * arity, S.INT)
        return self._ubit[key]

    # integer-rail forms

    def norm_term(self, kind: str, t: S.Term) -> S.Term:
        w = KIND_BITS[kind]
        m = S.IntLit(1 << w)
        if kind in SIGNED_KINDS:
            half = S.IntLit(1 << (w - 1))
            return S.sub(S.imod(S.add(t, half), m), half)
        return S.imod(t, m)

    def in_bounds_term(self, kind: str, t: S.Term) -> S.Term:
        lo, hi = kind_range(kind)
        return S.conj(S.le(S.IntLit(lo), t), S.le(t, S.IntLit(hi)))

    def bv_term(self, op: str, kind: str, a: S.Term, b: S.Term) -> S.Term:
        if op == "/":
            return S.bvop("bvsdiv" if is_signed(kind) else "bvudiv", a, b)
        if op == "%":
            return S.bvop("bvsrem" if is_signed(kind) else "bvurem", a, b)
        if op == ">>":
            return S.bvop("bvashr" if is_signed(kind) else "bvlshr", a, b)
        return S.bvop(_BVOP[op], a, b)

    def resize_bv(self, t: S.Term, src: str, dst: str) -> S.Term:
        ws, wd = KIND_BITS[src], KIND_BITS[dst]
        if ws == wd:
            return t
        if ws > wd:
            return S.extract(t, wd - 1, 0)
        if is_signed(src):
            return S.sext(t, wd - ws)
        return S.zext(t, wd - ws)

    # axioms, per kind actually used

    def axioms(self) -> list[tuple[str, S.Term]]:
        out = []
        for kind in sorted(self.used_kinds):
            lo, hi = kind_range(kind)
            b = S.Const("b!", bvsort(kind))
            ti = self._to_int[kind](b)
            out.append(("%s_range" % kind.replace("$", "_"),
                        S.forall([b], S.conj(S.le(S.IntLit(lo), ti),
                                             S.le(ti, S.IntLit(hi))),
                                 [ti])))
            if kind in self._of_int:
                out.append(("%s_retract" % kind,
                            S.forall([b], S.eq(self._of_int[kind](ti), b),
                                     [ti])))
            if self.dual:
                out.extend(self._relating(kind))
        for (op, kind) in sorted(self.used_ubit):
            fn = self._ubit[(op, kind)]
            lo, hi = kind_range(kind)
            xs = [S.Const("x%d!" % i, S.INT) for i in range(len(fn.params))]
            app = fn(*xs)
            out.append(("%s_range" % fn.name.replace("$", "_"),
                        S.forall(xs, S.conj(S.le(S.IntLit(lo), app),
                                            S.le(app, S.IntLit(hi))),
                                 [app])))
        return out

    def _relating(self, kind: str) -> list[tuple[str, S.Term]]:
        """Bitwise facts on the integer rail. The sum identities hold for
        the signed reading as well: the bitstring identity
        x + y = 2(x & y) + (x ^ y) survives the 2^w msb correction because
        2(mx and my) + (mx xor my) = mx + my on the sign bits."""
        ti = self._to_int[kind]
        x = S.Const("x!", bvsort(kind))
        y = S.Const("y!", bvsort(kind))
        tx, ty = ti(x), ti(y)
        both = S.add(tx, ty)
        pre = kind.replace("$", "_")
        out = [
            ("%s_and_xor" % pre, S.forall([x, y], S.eq(
                S.add(S.mul(S.IntLit(2), ti(S.bvop("bvand", x, y))),
                      ti(S.bvop("bvxor", x, y))), both),
                [ti(S.bvop("bvand", x, y)), ti(S.bvop("bvxor", x, y))])),
            ("%s_or_and" % pre, S.forall([x, y], S.eq(
                S.add(ti(S.bvop("bvor", x, y)),
                      ti(S.bvop("bvand", x, y))), both),
                [ti(S.bvop("bvor", x, y)), ti(S.bvop("bvand", x, y))])),
        ]
        if kind in SIGNED_KINDS:
            n = S.eq(ti(S.bvop("bvnot", x)),
                     S.sub(S.IntLit(-1), tx))
        else:
            hi = kind_range(kind)[1]
            n = S.eq(ti(S.bvop("bvnot", x)),
                     S.sub(S.IntLit(hi), tx))
        out.append(("%s_not" % pre, S.forall([x], n,
                                             [ti(S.bvop("bvnot", x))])))
        return out

    # posts: the integer-rail fact about z = a op b, or None when the
    # result is only characterized on the bitvector rail

    def int_post(self, op: str, kind: str, wrap: bool, a: S.Term,
                 b: S.Term, shamt: Optional[int] = None) -> Optional[S.Term]:
        if self.model == "math":
            wrap = False
        if op in ("+", "-", "*"):
            r = {"+": S.add, "-": S.sub, "*": S.mul}[op](a, b)
            return self.norm_term(kind, r) if self.wraps(wrap) else r
        if op == "/":
            if is_signed(kind) and self.model == "combined":
                return None           # trunc vs Euclidean: bitvector rail
            return S.idiv(a, b)
        if op == "%":
            if is_signed(kind) and self.model == "combined":
                return None
            return S.imod(a, b)
        if op == "<<":
            if shamt is None:
                return None
            r = S.mul(a, S.IntLit(1 << shamt))
            return self.norm_term(kind, r) if self.wraps(wrap) else r
        if op == ">>":
            if shamt is None:
                return None
            return S.idiv(a, S.IntLit(1 << shamt))
        if op in ("&", "|", "^"):
            if self.model == "combined":
                return None
            return self.ubit_fn(op, kind)(a, b)
        raise ValueError("bad op %r" % op)

    def wraps(self, wrap: bool) -> bool:
        return (wrap or self.model == "modulo") and self.model != "math"

    def unary_post(self, op: str, kind: str, wrap: bool,
                   a: S.Term) -> Optional[S.Term]:
        if op == "-":
            r = S.Op("-", (a,), S.INT)
            return self.norm_term(kind, r) if self.wraps(wrap) else r
        if op == "~":
            if self.model == "combined":
                return None
            return self.ubit_fn("~", kind)(a)
        raise ValueError("bad op %r" % op)

    def cast_post(self, dst: str, wrap: bool, a: S.Term) -> S.Term:
        if self.model == "math":
            return a
        return self.norm_term(dst, a) if self.wraps(wrap) else a

    # safety obligations (None: nothing to prove)

    def safety(self, op: str, kind: str, wrap: bool, a: S.Term, b: S.Term,
               shamt: Optional[int] = None) -> list[tuple[str, S.Term]]:
        out = []
        checked = self.model in ("defensive", "combined") and not wrap
        if op in ("/", "%"):
            out.append(("div", S.neg(S.eq(b, S.IntLit(0)))))
            if is_signed(kind) and self.model != "math":
                lo, _ = kind_range(kind)
                out.append(("overflow",
                            S.neg(S.conj(S.eq(a, S.IntLit(lo)),
                                         S.eq(b, S.IntLit(-1))))))
            return out
        if op in ("<<", ">>"):
            w = KIND_BITS[kind]
            if shamt is None:
                out.append(("shift", S.conj(S.le(S.IntLit(0), b),
                                            S.lt(b, S.IntLit(w)))))
            elif not 0 <= shamt < w:
                out.append(("shift", S.FALSE))
            if op == ">>" and is_signed(kind) and self.model != "math":
                out.append(("shift", S.ge(a, S.IntLit(0))))
            if op == "<<" and checked and shamt is not None:
                out.append(("overflow", self.in_bounds_term(
                    kind, S.mul(a, S.IntLit(1 << shamt)))))
            if op == "<<" and checked and shamt is None:
                raise ValueError("shift by a non-literal amount needs a "
                                 "wrap marker")
            return out
        if op in ("&", "|", "^"):
            return out
        if checked:
            r = {"+": S.add, "-": S.sub, "*": S.mul}[op](a, b)
            out.append(("overflow", self.in_bounds_term(kind, r)))
        return out

    def unary_safety(self, op: str, kind: str, wrap: bool,
                     a: S.Term) -> list[tuple[str, S.Term]]:
        if op == "-" and self.model in ("defensive", "combined") and not wrap:
            return [("overflow",
                     self.in_bounds_term(kind, S.Op("-", (a,), S.INT)))]
        return []

    def cast_safety(self, src: str, dst: str, wrap: bool,
                    a: S.Term) -> list[tuple[str, S.Term]]:
        if self.model not in ("defensive", "combined") or wrap:
            return []
        lo1, hi1 = kind_range(src)
        lo2, hi2 = kind_range(dst)
        if lo2 <= lo1 and hi1 <= hi2:
            return []
        return [("overflow", self.in_bounds_term(dst, a))]
