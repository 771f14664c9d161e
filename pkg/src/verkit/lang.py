"""AST for the annotated C subset: code, contracts, loop specs, ghost code
and logic declarations. Positions are carried for diagnostics but excluded
from structural equality so round-trip tests compare shape only."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self):
        return "%d:%d" % (self.line, self.col)


NOPOS = Pos(0, 0)


def _pos():
    return field(default=NOPOS, compare=False, repr=False)


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class TypeExpr:
    """Surface type: base name plus pointer depth. `const` qualifiers are
    kept per level for printing but ignored semantically."""
    base: str                      # "char", "u8", "int", "unsigned", "size_t", "u64", "integer"
    ptr: int = 0
    const: tuple[bool, ...] = ()   # length ptr+1; [0] qualifies the base

    def __post_init__(self):
        if not self.const:
            object.__setattr__(self, "const", tuple([False] * (self.ptr + 1)))

    def pointer_to(self):
        return TypeExpr(self.base, self.ptr + 1, self.const + (False,))


# ---------------------------------------------------------------- expressions

class Expr:
    pass


@dataclass(frozen=True)
class Ident(Expr):
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class IntConst(Expr):
    value: int
    suffix: str = ""        # "", "U", "UL", "ULL"
    char: bool = False      # printed as a character literal
    hex: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary(Expr):
    op: str                 # "-", "!", "~", "*" (deref)
    operand: Expr
    wrap: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary(Expr):
    op: str                 # arithmetic/bitwise/shift/relational/logical, "==>", "<==>"
    left: Expr
    right: Expr
    wrap: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign(Expr):
    target: Expr
    value: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class CompoundAssign(Expr):
    op: str                 # "+", "-", "*", "/", "%", "<<", ">>", "&", "|", "^"
    target: Expr
    value: Expr
    wrap: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class IncDec(Expr):
    op: str                 # "++" | "--"
    prefix: bool
    target: Expr
    wrap: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class Cast(Expr):
    type: TypeExpr
    operand: Expr
    wrap: bool = False
    implicit: bool = False  # materialized by the typechecker, never parsed
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]
    label: Optional[str] = None   # logic applications may carry {Label}
    pos: Pos = _pos()


@dataclass(frozen=True)
class Index(Expr):
    base: Expr
    index: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Ternary(Expr):
    cond: Expr
    then: Expr
    els: Expr
    pos: Pos = _pos()


# ----- annotation-only expressions

@dataclass(frozen=True)
class QuantExpr(Expr):
    kind: str               # "forall" | "exists"
    binders: tuple[tuple[TypeExpr, str], ...]
    body: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class At(Expr):
    operand: Expr
    label: str              # Pre | Here | Old | LoopEntry
    pos: Pos = _pos()


@dataclass(frozen=True)
class Result(Expr):
    pos: Pos = _pos()


@dataclass(frozen=True)
class NullPtr(Expr):
    pos: Pos = _pos()


@dataclass(frozen=True)
class BoolConst(Expr):
    value: bool             # \true / \false
    pos: Pos = _pos()


@dataclass(frozen=True)
class Valid(Expr):
    """\\valid(base) or \\valid(base+(lo..hi))."""
    base: Expr
    lo: Optional[Expr] = None
    hi: Optional[Expr] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class RangeExpr(Expr):
    """(lo..hi) — legal only inside \\valid arguments and assigns terms."""
    lo: Expr
    hi: Expr
    pos: Pos = _pos()


# ---------------------------------------------------------------- statements

class Stmt:
    pass


@dataclass(frozen=True)
class DeclStmt(Stmt):
    type: TypeExpr
    name: str
    init: Optional[Expr]
    ghost: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr
    ghost: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: tuple[Stmt, ...]
    els: tuple[Stmt, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class LoopSpec:
    invariants: tuple[Expr, ...] = ()
    variant: Optional[Expr] = None


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: tuple[Stmt, ...]
    spec: Optional[LoopSpec] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class DoWhile(Stmt):
    body: tuple[Stmt, ...]
    cond: Expr
    spec: Optional[LoopSpec] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class For(Stmt):
    # init holds declarations or expressions; step a comma list
    init: Optional[tuple[Union[Expr, "DeclStmt"], ...]]
    cond: Optional[Expr]
    step: Optional[tuple[Expr, ...]]
    body: tuple[Stmt, ...]
    spec: Optional[LoopSpec] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Break(Stmt):
    pos: Pos = _pos()


@dataclass(frozen=True)
class Continue(Stmt):
    pos: Pos = _pos()


@dataclass(frozen=True)
class Block(Stmt):
    stmts: tuple[Stmt, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class AssertStmt(Stmt):
    formula: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class UnifyPragma(Stmt):
    left: str
    right: str
    pos: Pos = _pos()


# ---------------------------------------------------------------- contracts

@dataclass(frozen=True)
class Behavior:
    name: str
    assumes: tuple[Expr, ...] = ()
    ensures: tuple[Expr, ...] = ()
    pos: Pos = _pos()


@dataclass(frozen=True)
class AssignsItem:
    """A location set: `*p`, `p[lo..hi]` or a plain lvalue."""
    base: Expr
    lo: Optional[Expr] = None
    hi: Optional[Expr] = None


@dataclass(frozen=True)
class Contract:
    requires: tuple[Expr, ...] = ()
    assigns: Optional[tuple[AssignsItem, ...]] = None  # None: no clause; (): \nothing
    ensures: tuple[Expr, ...] = ()
    behaviors: tuple[Behavior, ...] = ()
    complete: bool = False
    disjoint: bool = False

    def __post_init__(self):
        if (self.complete or self.disjoint) and not self.behaviors:
            raise ValueError("complete/disjoint without behaviors")


# ---------------------------------------------------------------- declarations

@dataclass(frozen=True)
class Param:
    type: TypeExpr
    name: str


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[Param, ...]
    return_type: TypeExpr
    contract: Contract = Contract()
    body: Optional[tuple[Stmt, ...]] = None   # None: external declaration
    pos: Pos = _pos()

    def __post_init__(self):
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter in %s" % self.name)


@dataclass(frozen=True)
class LogicDecl:
    kind: str               # "logic" | "predicate" | "axiom" | "lemma"
    name: str
    ret: Optional[TypeExpr] = None           # logic functions only
    params: tuple[Param, ...] = ()
    body: Optional[Expr] = None              # None: uninterpreted / axiomatized
    labels: tuple[str, ...] = ()             # heap-state label parameters
    pos: Pos = _pos()


@dataclass(frozen=True)
class Pragma:
    name: str
    args: tuple[str, ...]
    pos: Pos = _pos()


Declaration = Union[FunctionDef, LogicDecl, Pragma]


@dataclass(frozen=True)
class AnnotatedUnit:
    declarations: tuple[Declaration, ...]
    source_name: str = field(default="<unit>", compare=False)

    def functions(self):
        return [d for d in self.declarations if isinstance(d, FunctionDef)]

    def logic_decls(self):
        return [d for d in self.declarations if isinstance(d, LogicDecl)]

    def pragmas(self):
        return [d for d in self.declarations if isinstance(d, Pragma)]


def merge_units(units: list[AnnotatedUnit]) -> AnnotatedUnit:
    decls = []
    for u in units:
        decls.extend(u.declarations)
    name = "+".join(u.source_name for u in units) if units else "<empty>"
    return AnnotatedUnit(tuple(decls), name)
