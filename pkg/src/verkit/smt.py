"""First-order terms over Int/Bool/BitVec/arrays/uninterpreted sorts, plus
the SMT-LIB 2 printer. This is the formula representation shared by the
VC generator, the transformation passes and the script emitter."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional


# ---------------------------------------------------------------- sorts

@dataclass(frozen=True)
class Sort:
    def smt(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class IntSort(Sort):
    def smt(self):
        return "Int"


@dataclass(frozen=True)
class BoolSort(Sort):
    def smt(self):
        return "Bool"


@dataclass(frozen=True)
class BVSort(Sort):
    width: int

    def smt(self):
        return "(_ BitVec %d)" % self.width


@dataclass(frozen=True)
class USort(Sort):
    """Uninterpreted sort (pointer sorts, allocation-table sorts)."""
    name: str

    def smt(self):
        return self.name


@dataclass(frozen=True)
class ArraySort(Sort):
    index: Sort
    elem: Sort

    def smt(self):
        return "(Array %s %s)" % (self.index.smt(), self.elem.smt())


INT = IntSort()
BOOL = BoolSort()
BV8 = BVSort(8)
BV32 = BVSort(32)
BV64 = BVSort(64)


# ---------------------------------------------------------------- declarations

@dataclass(frozen=True)
class FunDecl:
    """Function symbol. `definition` holds (params, body) for symbols with
    explicit definitions; those are the only ones the inline pass unfolds."""
    name: str
    params: tuple[Sort, ...]
    ret: Sort
    definition: Optional[tuple[tuple["Const", ...], "Term"]] = field(
        default=None, compare=False, hash=False)

    def __call__(self, *args: "Term") -> "App":
        return App(self, tuple(args))


# ---------------------------------------------------------------- terms

class Term:
    sort: Sort

    def __eq__(self, other):
        return isinstance(other, Term) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def key(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Const(Term):
    name: str
    sort: Sort

    def key(self):
        return ("const", self.name, self.sort)


@dataclass(frozen=True, eq=False)
class IntLit(Term):
    value: int
    sort: Sort = INT

    def key(self):
        return ("int", self.value)


@dataclass(frozen=True, eq=False)
class BVLit(Term):
    value: int
    width: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % (1 << self.width))

    @property
    def sort(self):
        return BVSort(self.width)

    def key(self):
        return ("bv", self.value, self.width)


@dataclass(frozen=True, eq=False)
class BoolLit(Term):
    value: bool
    sort: Sort = BOOL

    def key(self):
        return ("bool", self.value)


TRUE = BoolLit(True)
FALSE = BoolLit(False)

# builtin operator -> result sort rule; None means "sort of first argument"
_BOOL_OPS = {"and", "or", "not", "=>", "=", "distinct",
             "<=", "<", ">", ">=", "bvult", "bvule", "bvslt", "bvsle"}
_ARITH_OPS = {"+", "-", "*", "div", "mod", "abs"}
_BV_OPS = {"bvadd", "bvsub", "bvmul", "bvudiv", "bvurem", "bvsdiv", "bvsrem",
           "bvand", "bvor", "bvxor", "bvnot", "bvneg", "bvshl", "bvlshr", "bvashr"}


@dataclass(frozen=True, eq=False)
class Op(Term):
    """Builtin SMT-LIB operator application."""
    name: str
    args: tuple[Term, ...]
    sort: Sort

    def key(self):
        return ("op", self.name, tuple(a.key() for a in self.args))


@dataclass(frozen=True, eq=False)
class App(Term):
    fn: FunDecl
    args: tuple[Term, ...]

    def __post_init__(self):
        if len(self.args) != len(self.fn.params):
            raise ValueError("arity mismatch in %s" % self.fn.name)

    @property
    def sort(self):
        return self.fn.ret

    def key(self):
        return ("app", self.fn.name, tuple(a.key() for a in self.args))


@dataclass(frozen=True, eq=False)
class Quant(Term):
    kind: str  # "forall" | "exists"
    binders: tuple[Const, ...]
    body: Term
    sort: Sort = BOOL
    # instantiation hints: each entry is one multipattern (tuple of terms).
    # No semantic content, but solvers loop without curated triggers.
    patterns: tuple[tuple[Term, ...], ...] = ()

    def key(self):
        return ("q", self.kind, tuple(b.key() for b in self.binders),
                self.body.key(),
                tuple(tuple(p.key() for p in ps) for ps in self.patterns))


# ---------------------------------------------------------------- constructors

def _flatten(name, args):
    out = []
    for a in args:
        if isinstance(a, Op) and a.name == name:
            out.extend(a.args)
        else:
            out.append(a)
    return out


def conj(*args: Term) -> Term:
    args = [a for a in _flatten("and", args) if a != TRUE]
    if any(a == FALSE for a in args):
        return FALSE
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return Op("and", tuple(args), BOOL)


def disj(*args: Term) -> Term:
    args = [a for a in _flatten("or", args) if a != FALSE]
    if any(a == TRUE for a in args):
        return TRUE
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return Op("or", tuple(args), BOOL)


def neg(a: Term) -> Term:
    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    if isinstance(a, Op) and a.name == "not":
        return a.args[0]
    return Op("not", (a,), BOOL)


def implies(a: Term, b: Term) -> Term:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    return Op("=>", (a, b), BOOL)


def eq(a: Term, b: Term) -> Term:
    if a.sort != b.sort:
        raise ValueError("eq on %s vs %s" % (a.sort, b.sort))
    if a == b:
        return TRUE
    return Op("=", (a, b), BOOL)


def ite(c: Term, t: Term, e: Term) -> Term:
    if c == TRUE:
        return t
    if c == FALSE:
        return e
    return Op("ite", (c, t, e), t.sort)


def add(*args):
    return Op("+", tuple(args), INT)


def sub(a, b):
    return Op("-", (a, b), INT)


def mul(*args):
    return Op("*", tuple(args), INT)


def idiv(a, b):
    return Op("div", (a, b), INT)


def imod(a, b):
    return Op("mod", (a, b), INT)


def le(a, b):
    return Op("<=", (a, b), BOOL)


def lt(a, b):
    return Op("<", (a, b), BOOL)


def ge(a, b):
    return Op(">=", (a, b), BOOL)


def gt(a, b):
    return Op(">", (a, b), BOOL)


def bvop(name, *args):
    return Op(name, tuple(args), args[0].sort)


def bvcmp(name, a, b):
    return Op(name, (a, b), BOOL)


def zext(a: Term, extra: int) -> Term:
    w = a.sort.width + extra
    return Op("zero_extend.%d" % extra, (a,), BVSort(w))


def sext(a: Term, extra: int) -> Term:
    w = a.sort.width + extra
    return Op("sign_extend.%d" % extra, (a,), BVSort(w))


def extract(a: Term, hi: int, lo: int) -> Term:
    return Op("extract.%d.%d" % (hi, lo), (a,), BVSort(hi - lo + 1))


def select(arr: Term, idx: Term) -> Term:
    return Op("select", (arr, idx), arr.sort.elem)


def store(arr: Term, idx: Term, val: Term) -> Term:
    return Op("store", (arr, idx, val), arr.sort)


def forall(binders, body, patterns=()) -> Term:
    binders = tuple(binders)
    if not binders:
        return body
    pats = tuple(tuple(p) if isinstance(p, (tuple, list)) else (p,)
                 for p in patterns)
    return Quant("forall", binders, body, BOOL, pats)


def exists(binders, body) -> Term:
    binders = tuple(binders)
    if not binders:
        return body
    return Quant("exists", binders, body)


# ---------------------------------------------------------------- traversal

def substitute(t: Term, mapping: dict[Term, Term]) -> Term:
    """Capture-avoiding only in the sense we need: mapping keys are Consts
    with globally fresh names, never quantifier binders."""
    if t in mapping:
        return mapping[t]
    if isinstance(t, (Const, IntLit, BVLit, BoolLit)):
        return t
    if isinstance(t, Op):
        return Op(t.name, tuple(substitute(a, mapping) for a in t.args), t.sort)
    if isinstance(t, App):
        return App(t.fn, tuple(substitute(a, mapping) for a in t.args))
    if isinstance(t, Quant):
        inner = {k: v for k, v in mapping.items() if k not in t.binders}
        if not inner:
            return t
        pats = tuple(tuple(substitute(p, inner) for p in ps)
                     for ps in t.patterns)
        return Quant(t.kind, t.binders, substitute(t.body, inner), t.sort, pats)
    raise TypeError(t)


def walk(t: Term):
    yield t
    if isinstance(t, Op):
        for a in t.args:
            yield from walk(a)
    elif isinstance(t, App):
        for a in t.args:
            yield from walk(a)
    elif isinstance(t, Quant):
        yield from walk(t.body)


def fun_symbols(t: Term) -> set[str]:
    return {s.fn.name for s in walk(t) if isinstance(s, App)}


def free_consts(t: Term, bound=()) -> set[Const]:
    out = set()

    def go(t, bound):
        if isinstance(t, Const):
            if t not in bound:
                out.add(t)
        elif isinstance(t, (Op, App)):
            for a in t.args:
                go(a, bound)
        elif isinstance(t, Quant):
            go(t.body, bound | set(t.binders))

    go(t, frozenset(bound))
    return out


def sorts_used(t: Term) -> set[Sort]:
    out = set()
    for s in walk(t):
        sort = s.sort
        while isinstance(sort, ArraySort):
            out.add(sort.index)
            sort = sort.elem
        out.add(sort)
        if isinstance(s, Quant):
            for b in s.binders:
                out.add(b.sort)
    return out


class NameGen:
    """Deterministic fresh-name source; one per VC session."""

    def __init__(self):
        self.counts: dict[str, int] = {}

    def fresh(self, base: str) -> str:
        n = self.counts.get(base, 0)
        self.counts[base] = n + 1
        return base if n == 0 else "%s.%d" % (base, n)


# ---------------------------------------------------------------- printing

def _bvlit_smt(value, width):
    if width % 4 == 0:
        return "#x%0*x" % (width // 4, value)
    return "#b" + format(value, "0%db" % width)


def to_sexpr(t: Term) -> str:
    if isinstance(t, Const):
        return t.name
    if isinstance(t, IntLit):
        if t.value < 0:
            return "(- %d)" % -t.value
        return str(t.value)
    if isinstance(t, BVLit):
        return _bvlit_smt(t.value, t.width)
    if isinstance(t, BoolLit):
        return "true" if t.value else "false"
    if isinstance(t, App):
        if not t.args:
            return t.fn.name
        return "(%s %s)" % (t.fn.name, " ".join(to_sexpr(a) for a in t.args))
    if isinstance(t, Op):
        name = t.name
        if "." in name:
            head, *idx = name.split(".")
            name = "(_ %s %s)" % (head, " ".join(idx))
        return "(%s %s)" % (name, " ".join(to_sexpr(a) for a in t.args))
    if isinstance(t, Quant):
        bs = " ".join("(%s %s)" % (b.name, b.sort.smt()) for b in t.binders)
        body = to_sexpr(t.body)
        if t.patterns:
            pats = " ".join(
                ":pattern (%s)" % " ".join(to_sexpr(p) for p in ps)
                for ps in t.patterns)
            body = "(! %s %s)" % (body, pats)
        return "(%s (%s) %s)" % (t.kind, bs, body)
    raise TypeError(t)


def pretty(t: Term, indent=0, width=100) -> str:
    """Readable multi-line rendering for goal dumps."""
    flat = to_sexpr(t)
    if len(flat) + indent <= width or not isinstance(t, (Op, App, Quant)):
        return flat
    pad = " " * (indent + 2)
    if isinstance(t, Quant):
        bs = " ".join("(%s %s)" % (b.name, b.sort.smt()) for b in t.binders)
        return "(%s (%s)\n%s%s)" % (
            t.kind, bs, pad, pretty(t.body, indent + 2, width))
    if isinstance(t, App):
        head = t.fn.name
        args = t.args
    else:
        head = t.name
        if "." in head:
            h, *idx = head.split(".")
            head = "(_ %s %s)" % (h, " ".join(idx))
        args = t.args
    parts = [pretty(a, indent + 2, width) for a in args]
    return "(%s\n%s%s)" % (head, pad, ("\n" + pad).join(parts))
