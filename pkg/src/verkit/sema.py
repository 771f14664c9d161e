"""Typechecker.

Walks a parsed unit, resolves names, materializes the implicit casts of C's
usual arithmetic conversions as Cast(implicit=True) nodes, rewrites chained
relations in annotations (a <= b < c) into conjunctions, and records the
type of every rebuilt expression node keyed by id(). Code expressions carry
machine types; annotation expressions live in the logic world where every
machine integer is coerced to a mathematical integer."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from . import lang as L

BUILTIN_LABELS = ("Pre", "Here", "Old", "LoopEntry")

KIND_BITS = {"i8": 8, "u8": 8, "i32": 32, "u32": 32, "i64": 64, "u64": 64}
SIGNED_KINDS = {"i8", "i32", "i64"}
BASE_KIND = {"char": "i8", "u8": "u8", "int": "i32", "unsigned": "u32",
             "size_t": "u64", "u64": "u64", "integer": "int",
             "boolean": "bool"}
_RANK = {"i32": 0, "u32": 1, "i64": 2, "u64": 3}

RELATIONAL = ("<", "<=", ">", ">=")
EQUALITY = ("==", "!=")
ARITH = ("+", "-", "*", "/", "%")
BITWISE = ("&", "|", "^")
SHIFTS = ("<<", ">>")
LOGICAL = ("&&", "||", "==>")


class SemaError(Exception):
    def __init__(self, msg, pos=None):
        where = "%s: " % pos if pos else ""
        super().__init__(where + msg)
        self.msg = msg
        self.pos = pos


@dataclass(frozen=True)
class CType:
    kind: str                       # machine kind, "int", "bool", "ptr", "null"
    elem: Optional["CType"] = None  # pointee, for kind == "ptr"
    const_elem: bool = False

    def is_machine(self):
        return self.kind in KIND_BITS

    def is_ptr(self):
        return self.kind == "ptr"

    def __str__(self):
        if self.kind == "ptr":
            return str(self.elem) + "*"
        return self.kind


INT = CType("int")
BOOL = CType("bool")
NULL = CType("null")


def kind_range(kind):
    bits = KIND_BITS[kind]
    if kind in SIGNED_KINDS:
        return -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    return 0, (1 << bits) - 1


def ctype_of(t: L.TypeExpr, pos=None) -> CType:
    kind = BASE_KIND.get(t.base)
    if kind is None:
        raise SemaError("unknown type %r" % t.base, pos)
    ct = CType(kind)
    for lvl in range(t.ptr):
        const = len(t.const) > lvl and bool(t.const[lvl])
        ct = CType("ptr", ct, const)
    return ct


def promote(kind: str) -> str:
    return "i32" if kind in ("i8", "u8") else kind


def usual_arith(k1: str, k2: str) -> str:
    a, b = promote(k1), promote(k2)
    if a == b:
        return a
    if (a in SIGNED_KINDS) == (b in SIGNED_KINDS):
        return a if _RANK[a] > _RANK[b] else b
    u, s = (a, b) if a not in SIGNED_KINDS else (b, a)
    if _RANK[u] >= _RANK[s]:
        return u
    if KIND_BITS[s] > KIND_BITS[u]:   # the signed type covers the unsigned
        return s
    return "u" + s[1:]


def widening(src: str, dst: str) -> bool:
    """True when every src value is representable in dst (no VC needed)."""
    lo1, hi1 = kind_range(src)
    lo2, hi2 = kind_range(dst)
    return lo2 <= lo1 and hi1 <= hi2


_KIND_TYPEEXPR = {"i8": "char", "u8": "u8", "i32": "int", "u32": "unsigned",
                  "i64": "int", "u64": "u64"}


def kind_typeexpr(kind: str) -> L.TypeExpr:
    return L.TypeExpr(_KIND_TYPEEXPR[kind], 0, (False,))


@dataclass
class VarInfo:
    type: CType
    ghost: bool = False
    param: bool = False


@dataclass
class FuncInfo:
    decl: L.FunctionDef
    params: tuple[CType, ...]
    ret: CType
    locals: dict[str, VarInfo] = field(default_factory=dict)


@dataclass
class LogicInfo:
    decl: L.LogicDecl
    params: tuple[CType, ...]
    ret: Optional[CType]            # None for predicates
    param_kinds: tuple[Optional[str], ...] = ()  # machine kind per int param


@dataclass
class SemaResult:
    unit: L.AnnotatedUnit
    types: dict                     # id(expr) -> CType
    wrap_widths: dict               # id(expr) -> machine kind for annot wraps
    funcs: dict                     # name -> FuncInfo
    logics: dict                    # name -> LogicInfo
    int_model: str = "combined"


class Sema:
    def __init__(self, unit: L.AnnotatedUnit):
        self.unit = unit
        self.types: dict[int, CType] = {}
        self.wrap_widths: dict[int, str] = {}
        self.funcs: dict[str, FuncInfo] = {}
        self.logics: dict[str, LogicInfo] = {}
        self.int_model = "combined"
        # per-function walking state
        self.scopes: list[dict[str, VarInfo]] = []
        self.fn: Optional[FuncInfo] = None
        self.loop_depth = 0
        self.in_ghost = False

    # ------------------------------------------------------------ entry

    def run(self) -> SemaResult:
        decls = []
        for d in self.unit.declarations:
            if isinstance(d, L.Pragma):
                self.pragma(d)
                decls.append(d)
            elif isinstance(d, L.LogicDecl):
                decls.append(self.logic_decl(d))
            elif isinstance(d, L.FunctionDef):
                decls.append(self.function(d))
            else:
                raise SemaError("unexpected declaration", getattr(d, "pos", None))
        unit = L.AnnotatedUnit(tuple(decls), self.unit.source_name)
        return SemaResult(unit, self.types, self.wrap_widths, self.funcs,
                          self.logics, self.int_model)

    def pragma(self, d: L.Pragma):
        if d.name != "int_model":
            raise SemaError("unknown pragma %r" % d.name, d.pos)
        if len(d.args) != 1 or d.args[0] not in ("math", "defensive",
                                                 "modulo", "combined"):
            raise SemaError("pragma int_model expects one of "
                            "math|defensive|modulo|combined", d.pos)
        self.int_model = d.args[0]

    # ------------------------------------------------------------ logic decls

    def logic_decl(self, d: L.LogicDecl) -> L.LogicDecl:
        if d.name in self.logics or d.name in self.funcs:
            raise SemaError("duplicate declaration of %s" % d.name, d.pos)
        for lbl in d.labels:
            if not lbl[0].isalpha():
                raise SemaError("bad label %r" % lbl, d.pos)
        if d.kind in ("axiom", "lemma"):
            body = self.formula(d.body, {}, labels=set(d.labels),
                                allow_old=False, result=None)
            new = replace(d, body=body)
            self.logics[d.name] = LogicInfo(new, (), None)
            return new
        # logic function or predicate
        ptypes, kinds = [], []
        env: dict[str, VarInfo] = {}
        for p in d.params:
            ct = ctype_of(p.type, d.pos)
            if ct.kind == "bool":
                raise SemaError("boolean logic parameters are not supported",
                                d.pos)
            machine = ct.kind if ct.is_machine() else None
            view = INT if ct.is_machine() else ct
            if p.name in env:
                raise SemaError("duplicate parameter %s" % p.name, d.pos)
            env[p.name] = VarInfo(view)
            ptypes.append(ct)
            kinds.append(machine)
        ret = None
        if d.kind == "logic":
            ret = ctype_of(d.ret, d.pos)
            if ret.kind == "bool":
                raise SemaError("use `predicate` for boolean results", d.pos)
        body = d.body
        if body is not None:
            if d.kind == "predicate":
                body = self.formula(body, env, labels=set(d.labels),
                                    allow_old=False, result=None)
            else:
                body, bt = self.term(body, env, labels=set(d.labels))
                want = INT if ret.is_machine() else ret
                if bt != want and bt != NULL:
                    raise SemaError("logic body has type %s, declared %s"
                                    % (bt, want), d.pos)
        new = replace(d, body=body)
        self.logics[d.name] = LogicInfo(new, tuple(ptypes),
                                        None if d.kind == "predicate"
                                        else ret, tuple(kinds))
        return new

    # ------------------------------------------------------------ functions

    def function(self, d: L.FunctionDef) -> L.FunctionDef:
        if d.name in self.funcs and not (self.funcs[d.name].decl.body is None
                                         and d.body is not None):
            raise SemaError("duplicate function %s" % d.name, d.pos)
        if d.name in self.logics:
            raise SemaError("%s already names a logic symbol" % d.name, d.pos)
        ret = ctype_of(d.return_type, d.pos)
        self.check_value_type(ret, d.pos, what="return type")
        params = []
        env: dict[str, VarInfo] = {}
        for p in d.params:
            ct = ctype_of(p.type, d.pos)
            self.check_value_type(ct, d.pos, what="parameter %s" % p.name,
                                  allow_ptrptr=True)
            env[p.name] = VarInfo(ct, param=True)
            params.append(ct)
        info = FuncInfo(d, tuple(params), ret, dict(env))
        self.fn = info
        self.scopes = [env]
        contract = self.contract(d.contract, d)
        body = None
        if d.body is not None:
            self.scopes.append({})
            body = tuple(self.stmts(d.body))
            self.scopes.pop()
        new = replace(d, contract=contract, body=body)
        info.decl = new
        self.funcs[d.name] = info
        self.fn = None
        self.scopes = []
        return new

    def check_value_type(self, ct: CType, pos, what, allow_ptrptr=False):
        if ct.is_machine():
            return
        if ct.is_ptr():
            if ct.elem.kind in ("i8", "u8"):
                return
            if allow_ptrptr and ct.elem.is_ptr() \
                    and ct.elem.elem.kind == "i8":
                return
        raise SemaError("unsupported %s %s" % (what, ct), pos)

    # ------------------------------------------------------------ contracts

    def contract(self, c: L.Contract, fn: L.FunctionDef) -> L.Contract:
        env = self.scopes[0]
        requires = tuple(self.formula(r, env, allow_old=False, result=None)
                         for r in c.requires)
        assigns = None
        if c.assigns is not None:
            assigns = tuple(self.assigns_item(a, env) for a in c.assigns)
        ret = self.fn.ret
        rtype = INT if ret.is_machine() else ret
        ensures = tuple(self.formula(r, env, allow_old=True, result=rtype)
                        for r in c.ensures)
        behaviors = []
        names = set()
        for b in c.behaviors:
            if b.name in names:
                raise SemaError("duplicate behavior %s" % b.name, b.pos)
            names.add(b.name)
            assumes = tuple(self.formula(a, env, allow_old=False, result=None)
                            for a in b.assumes)
            bens = tuple(self.formula(a, env, allow_old=True, result=rtype)
                         for a in b.ensures)
            behaviors.append(replace(b, assumes=assumes, ensures=bens))
        return replace(c, requires=requires, assigns=assigns,
                       ensures=ensures, behaviors=tuple(behaviors))

    def assigns_item(self, a: L.AssignsItem, env) -> L.AssignsItem:
        base, bt = self.term(a.base, env)
        lo = hi = None
        if a.lo is not None:
            if not bt.is_ptr():
                raise SemaError("assigns range needs a pointer base", None)
            lo = self.int_term(a.lo, env)
            hi = self.int_term(a.hi, env)
        else:
            # plain lvalue: *p or p[i]
            if not (isinstance(base, L.Unary) and base.op == "*"
                    or isinstance(base, L.Index)):
                raise SemaError("assigns item must be *p, p[i] or p[lo..hi]",
                                None)
        return L.AssignsItem(base, lo, hi)

    # ------------------------------------------------------------ statements

    def lookup(self, name) -> Optional[VarInfo]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def declare(self, name, info: VarInfo, pos):
        if self.lookup(name) is not None:
            raise SemaError("redeclaration of %s shadows an outer binding"
                            % name, pos)
        if name in self.fn.locals:
            raise SemaError("reuse of local name %s in a sibling scope"
                            % name, pos)
        self.scopes[-1][name] = info
        self.fn.locals[name] = info

    def stmts(self, body: tuple) -> list:
        return [self.stmt(s) for s in body]

    def stmt(self, s: L.Stmt) -> L.Stmt:
        if isinstance(s, L.DeclStmt):
            ct = ctype_of(s.type, s.pos)
            self.check_value_type(ct, s.pos, "local %s" % s.name)
            init = None
            if s.init is not None:
                was = self.in_ghost
                self.in_ghost = self.in_ghost or s.ghost
                init = self.coerce_to(self.expr(s.init), ct, s.pos)
                self.in_ghost = was
            elif s.ghost:
                raise SemaError("ghost variable needs an initializer", s.pos)
            self.declare(s.name, VarInfo(ct, ghost=s.ghost), s.pos)
            return replace(s, init=init)
        if isinstance(s, L.ExprStmt):
            was = self.in_ghost
            self.in_ghost = self.in_ghost or s.ghost
            e, _ = self.expr(s.expr)
            self.in_ghost = was
            if s.ghost and not self.writes_only_ghost(s.expr):
                raise SemaError("ghost code writes a non-ghost location",
                                s.pos)
            return replace(s, expr=e)
        if isinstance(s, L.AssertStmt):
            env = {}
            f = self.formula(s.formula, env, allow_old=False, result=None,
                             labels=set(BUILTIN_LABELS) - {"Old"})
            return replace(s, formula=f)
        if isinstance(s, L.UnifyPragma):
            for name in (s.left, s.right):
                vi = self.lookup(name)
                if vi is None:
                    raise SemaError("unify: unknown variable %s" % name, s.pos)
                if not vi.type.is_ptr():
                    raise SemaError("unify: %s is not a pointer" % name, s.pos)
            return s
        if isinstance(s, L.Block):
            self.scopes.append({})
            out = L.Block(tuple(self.stmts(s.stmts)), pos=s.pos)
            self.scopes.pop()
            return out
        if isinstance(s, L.If):
            cond = self.condition(s.cond)
            self.scopes.append({})
            then = tuple(self.stmts(s.then))
            self.scopes.pop()
            self.scopes.append({})
            els = tuple(self.stmts(s.els))
            self.scopes.pop()
            return replace(s, cond=cond, then=then, els=els)
        if isinstance(s, (L.While, L.DoWhile)):
            spec = self.loop_spec(s.spec)
            cond = self.condition(s.cond)
            self.scopes.append({})
            self.loop_depth += 1
            body = tuple(self.stmts(s.body))
            self.loop_depth -= 1
            self.scopes.pop()
            return replace(s, cond=cond, body=body, spec=spec)
        if isinstance(s, L.For):
            self.scopes.append({})
            init = None
            if s.init is not None:
                out = []
                for item in s.init:
                    if isinstance(item, L.DeclStmt):
                        out.append(self.stmt(item))
                    else:
                        out.append(self.expr(item)[0])
                init = tuple(out)
            # the loop spec sees the init scope
            spec = self.loop_spec(s.spec)
            cond = self.condition(s.cond) if s.cond is not None else None
            step = None
            if s.step is not None:
                step = tuple(self.expr(e)[0] for e in s.step)
            self.scopes.append({})
            self.loop_depth += 1
            body = tuple(self.stmts(s.body))
            self.loop_depth -= 1
            self.scopes.pop()
            self.scopes.pop()
            return replace(s, init=init, cond=cond, step=step, body=body,
                           spec=spec)
        if isinstance(s, L.Return):
            if s.value is None:
                raise SemaError("return needs a value", s.pos)
            value = self.coerce_to(self.expr(s.value), self.fn.ret, s.pos)
            return replace(s, value=value)
        if isinstance(s, (L.Break, L.Continue)):
            if self.loop_depth == 0:
                raise SemaError("break/continue outside a loop", s.pos)
            return s
        raise SemaError("unsupported statement %s" % type(s).__name__,
                        getattr(s, "pos", None))

    def loop_spec(self, spec: Optional[L.LoopSpec]) -> Optional[L.LoopSpec]:
        if spec is None:
            return None
        env = {}
        labels = set(BUILTIN_LABELS) - {"Old"}
        invs = tuple(self.formula(i, env, allow_old=False, result=None,
                                  labels=labels)
                     for i in spec.invariants)
        variant = None
        if spec.variant is not None:
            variant = self.int_term(spec.variant, env, labels=labels)
        return L.LoopSpec(invs, variant)

    def condition(self, e: L.Expr) -> L.Expr:
        new, ct = self.expr(e)
        if not (ct.is_machine() or ct.is_ptr() or ct.kind == "null"):
            raise SemaError("condition has type %s" % ct,
                            getattr(e, "pos", None))
        return new

    def writes_only_ghost(self, e: L.Expr) -> bool:
        if isinstance(e, (L.Assign, L.CompoundAssign, L.IncDec)):
            t = e.target
            if isinstance(t, L.Ident):
                vi = self.lookup(t.name)
                return vi is not None and vi.ghost
            return False   # heap writes are never ghost
        return True        # pure expression statement

    # ------------------------------------------------------------ code exprs

    def record(self, e: L.Expr, ct: CType):
        self.types[id(e)] = ct
        return e, ct

    def expr(self, e: L.Expr):
        """Typecheck a code expression; returns (rebuilt, CType)."""
        pos = getattr(e, "pos", None)
        if isinstance(e, L.Ident):
            vi = self.lookup(e.name)
            if vi is None:
                raise SemaError("unknown variable %s" % e.name, pos)
            if vi.ghost and not self.in_ghost:
                raise SemaError("ghost variable %s used in real code"
                                % e.name, pos)
            return self.record(e, vi.type)
        if isinstance(e, L.IntConst):
            return self.record(e, CType(literal_kind(e, pos)))
        if isinstance(e, L.NullPtr):
            return self.record(e, NULL)
        if isinstance(e, L.Unary):
            return self.unary(e)
        if isinstance(e, L.Binary):
            return self.binary(e)
        if isinstance(e, L.Assign):
            target, tt = self.lvalue(e.target)
            value = self.coerce_to(self.expr(e.value), tt, pos)
            return self.record(L.Assign(target, value, pos=pos), tt)
        if isinstance(e, L.CompoundAssign):
            return self.compound(e)
        if isinstance(e, L.IncDec):
            target, tt = self.lvalue(e.target)
            if tt.is_ptr():
                if e.wrap:
                    raise SemaError("wrap marker on pointer step", pos)
            elif not tt.is_machine():
                raise SemaError("cannot step a %s" % tt, pos)
            return self.record(replace(e, target=target), tt)
        if isinstance(e, L.Cast):
            return self.cast(e)
        if isinstance(e, L.Call):
            return self.call(e)
        if isinstance(e, L.Index):
            base, bt = self.expr(e.base)
            if not bt.is_ptr():
                raise SemaError("indexing a non-pointer", pos)
            idx, it = self.expr(e.index)
            if not it.is_machine():
                raise SemaError("index has type %s" % it, pos)
            return self.record(L.Index(base, idx, pos=pos), bt.elem)
        if isinstance(e, L.Ternary):
            cond = self.condition(e.cond)
            then, t1 = self.expr(e.then)
            els, t2 = self.expr(e.els)
            if t1.is_machine() and t2.is_machine():
                k = usual_arith(t1.kind, t2.kind)
                then = self.implicit_cast(then, t1, CType(k))
                els = self.implicit_cast(els, t2, CType(k))
                return self.record(L.Ternary(cond, then, els, pos=pos),
                                   CType(k))
            rt = self.merge_ptr(t1, t2, pos)
            return self.record(L.Ternary(cond, then, els, pos=pos), rt)
        raise SemaError("annotation construct in code", pos)

    def merge_ptr(self, t1: CType, t2: CType, pos) -> CType:
        if t1.kind == "null" and t2.is_ptr():
            return t2
        if t2.kind == "null" and t1.is_ptr():
            return t1
        if t1.is_ptr() and t2.is_ptr() and t1.elem.kind == t2.elem.kind:
            return t1
        raise SemaError("incompatible branch types %s and %s" % (t1, t2), pos)

    def unary(self, e: L.Unary):
        pos = e.pos
        operand, ot = self.expr(e.operand)
        if e.op == "*":
            if not ot.is_ptr():
                raise SemaError("dereferencing a non-pointer", pos)
            return self.record(L.Unary("*", operand, pos=pos), ot.elem)
        if e.op == "!":
            if not (ot.is_machine() or ot.is_ptr() or ot.kind == "null"):
                raise SemaError("! on %s" % ot, pos)
            return self.record(L.Unary("!", operand, pos=pos), CType("i32"))
        if e.op in ("-", "~"):
            if not ot.is_machine():
                raise SemaError("%s on %s" % (e.op, ot), pos)
            k = promote(ot.kind)
            operand = self.implicit_cast(operand, ot, CType(k))
            if e.op == "~" and e.wrap:
                raise SemaError("wrap marker on ~", pos)
            return self.record(L.Unary(e.op, operand, e.wrap, pos=pos),
                               CType(k))
        raise SemaError("bad unary %s" % e.op, pos)

    def binary(self, e: L.Binary):
        pos = e.pos
        left, lt = self.expr(e.left)
        right, rt = self.expr(e.right)
        op = e.op

        if op in LOGICAL:
            if op == "==>":
                raise SemaError("==> is an annotation operator", pos)
            for t in (lt, rt):
                if not (t.is_machine() or t.is_ptr() or t.kind == "null"):
                    raise SemaError("%s on %s" % (op, t), pos)
            return self.record(L.Binary(op, left, right, pos=pos),
                               CType("i32"))

        if op in SHIFTS:
            if not (lt.is_machine() and rt.is_machine()):
                raise SemaError("shift on %s, %s" % (lt, rt), pos)
            k = promote(lt.kind)
            left = self.implicit_cast(left, lt, CType(k))
            right = self.implicit_cast(right, rt, CType(promote(rt.kind)))
            if e.wrap and op == ">>":
                raise SemaError("wrap marker on >>", pos)
            return self.record(L.Binary(op, left, right, e.wrap, pos=pos),
                               CType(k))

        if op in RELATIONAL or op in EQUALITY:
            if lt.is_machine() and rt.is_machine():
                k = usual_arith(lt.kind, rt.kind)
                left = self.implicit_cast(left, lt, CType(k))
                right = self.implicit_cast(right, rt, CType(k))
            elif (lt.is_ptr() or lt.kind == "null") and \
                    (rt.is_ptr() or rt.kind == "null"):
                self.merge_ptr(lt, rt, pos)
            else:
                raise SemaError("comparison of %s and %s" % (lt, rt), pos)
            return self.record(L.Binary(op, left, right, pos=pos),
                               CType("i32"))

        if op in BITWISE:
            if not (lt.is_machine() and rt.is_machine()):
                raise SemaError("%s on %s, %s" % (op, lt, rt), pos)
            if e.wrap:
                raise SemaError("wrap marker on bitwise op", pos)
            k = usual_arith(lt.kind, rt.kind)
            left = self.implicit_cast(left, lt, CType(k))
            right = self.implicit_cast(right, rt, CType(k))
            return self.record(L.Binary(op, left, right, pos=pos), CType(k))

        if op in ARITH:
            if lt.is_ptr() or rt.is_ptr():
                return self.pointer_arith(e, left, lt, right, rt)
            if not (lt.is_machine() and rt.is_machine()):
                raise SemaError("%s on %s, %s" % (op, lt, rt), pos)
            if e.wrap and op in ("/", "%"):
                raise SemaError("wrap marker on division", pos)
            k = usual_arith(lt.kind, rt.kind)
            left = self.implicit_cast(left, lt, CType(k))
            right = self.implicit_cast(right, rt, CType(k))
            return self.record(L.Binary(op, left, right, e.wrap, pos=pos),
                               CType(k))
        raise SemaError("bad operator %s" % op, pos)

    def pointer_arith(self, e, left, lt, right, rt):
        pos = e.pos
        if e.wrap:
            raise SemaError("wrap marker on pointer arithmetic", pos)
        if e.op == "+":
            if lt.is_ptr() and rt.is_machine():
                return self.record(L.Binary("+", left, right, pos=pos), lt)
            if rt.is_ptr() and lt.is_machine():
                return self.record(L.Binary("+", left, right, pos=pos), rt)
        if e.op == "-":
            if lt.is_ptr() and rt.is_machine():
                return self.record(L.Binary("-", left, right, pos=pos), lt)
            if lt.is_ptr() and rt.is_ptr() and lt.elem.kind == rt.elem.kind:
                return self.record(L.Binary("-", left, right, pos=pos),
                                   CType("i64"))
        raise SemaError("bad pointer arithmetic %s %s %s" % (lt, e.op, rt),
                        pos)

    def compound(self, e: L.CompoundAssign):
        pos = e.pos
        target, tt = self.lvalue(e.target)
        value, vt = self.expr(e.value)
        if tt.is_ptr():
            if e.op not in ("+", "-") or not vt.is_machine():
                raise SemaError("bad pointer compound assignment", pos)
            if e.wrap:
                raise SemaError("wrap marker on pointer arithmetic", pos)
            return self.record(L.CompoundAssign(e.op, target, value,
                                                pos=pos), tt)
        if not (tt.is_machine() and vt.is_machine()):
            raise SemaError("%s= on %s, %s" % (e.op, tt, vt), pos)
        if e.op in ("/", "%") and e.wrap:
            raise SemaError("wrap marker on division", pos)
        if e.op in BITWISE and e.wrap:
            raise SemaError("wrap marker on bitwise op", pos)
        value = self.implicit_cast(
            value, vt, CType(usual_arith(tt.kind, vt.kind)))
        return self.record(L.CompoundAssign(e.op, target, value, e.wrap,
                                            pos=pos), tt)

    def lvalue(self, e: L.Expr):
        pos = getattr(e, "pos", None)
        if isinstance(e, L.Ident):
            new, ct = self.expr(e)
            vi = self.lookup(e.name)
            if self.in_ghost and not vi.ghost:
                raise SemaError("ghost code writes non-ghost %s" % e.name,
                                pos)
            if not self.in_ghost and vi.ghost:
                raise SemaError("real code writes ghost %s" % e.name, pos)
            return new, ct
        if isinstance(e, L.Unary) and e.op == "*":
            if self.in_ghost:
                raise SemaError("ghost code writes through a pointer", pos)
            new, ct = self.expr(e)
            inner_t = self.types[id(new.operand)]
            if inner_t.const_elem:
                raise SemaError("write through pointer to const", pos)
            return new, ct
        if isinstance(e, L.Index):
            if self.in_ghost:
                raise SemaError("ghost code writes through a pointer", pos)
            new, ct = self.expr(e)
            base_t = self.types[id(new.base)]
            if base_t.const_elem:
                raise SemaError("write through pointer to const", pos)
            return new, ct
        if isinstance(e, L.IncDec) or isinstance(e, L.Assign):
            raise SemaError("expression is not an lvalue", pos)
        raise SemaError("expression is not an lvalue", pos)

    def cast(self, e: L.Cast):
        pos = e.pos
        ct = ctype_of(e.type, pos)
        operand, ot = self.expr(e.operand)
        if ct.is_ptr():
            if e.wrap:
                raise SemaError("wrap marker on pointer cast", pos)
            if ot.kind == "null" or (ot.is_ptr()
                                     and ot.elem.kind == ct.elem.kind):
                return self.record(replace(e, operand=operand), ct)
            raise SemaError("bad pointer cast from %s to %s" % (ot, ct), pos)
        if not ct.is_machine():
            raise SemaError("cast to %s in code" % ct, pos)
        if not ot.is_machine():
            raise SemaError("cast from %s" % ot, pos)
        return self.record(replace(e, operand=operand), ct)

    def call(self, e: L.Call):
        pos = e.pos
        if e.label is not None:
            raise SemaError("label on a code call", pos)
        info = self.funcs.get(e.name)
        if info is None:
            if e.name in self.logics:
                raise SemaError("logic symbol %s called from code" % e.name,
                                pos)
            raise SemaError("unknown function %s" % e.name, pos)
        if self.in_ghost:
            raise SemaError("function call in ghost code", pos)
        if len(e.args) != len(info.params):
            raise SemaError("%s expects %d arguments" %
                            (e.name, len(info.params)), pos)
        args = tuple(self.coerce_to(self.expr(a), pt, pos)
                     for a, pt in zip(e.args, info.params))
        return self.record(L.Call(e.name, args, pos=pos), info.ret)

    def literal_fits(self, e: L.Expr, ct: CType) -> bool:
        if isinstance(e, L.IntConst) and ct.is_machine():
            lo, hi = kind_range(ct.kind)
            return lo <= e.value <= hi
        if isinstance(e, L.Unary) and e.op == "-" \
                and isinstance(e.operand, L.IntConst) and ct.is_machine():
            lo, hi = kind_range(ct.kind)
            return lo <= -e.operand.value <= hi
        return False

    def implicit_cast(self, e: L.Expr, have: CType, want: CType) -> L.Expr:
        if have == want:
            return e
        new = L.Cast(kind_typeexpr(want.kind), e, implicit=True,
                     pos=getattr(e, "pos", None))
        self.types[id(new)] = want
        return new

    def coerce_to(self, pair, want: CType, pos):
        e, have = pair
        if have == want:
            return e
        if want.is_ptr():
            if have.kind == "null":
                return e
            if have.is_ptr() and have.elem.kind == want.elem.kind:
                if have.const_elem and not want.const_elem:
                    raise SemaError("assignment drops const", pos)
                return e
            raise SemaError("cannot convert %s to %s" % (have, want), pos)
        if want.is_machine() and have.is_machine():
            return self.implicit_cast(e, have, want)
        raise SemaError("cannot convert %s to %s" % (have, want), pos)

    # ------------------------------------------------------------ annotations

    def formula(self, e: L.Expr, env: dict, labels=None, allow_old=False,
                result: Optional[CType] = None) -> L.Expr:
        new, ct = self.annot(e, env,
                             labels if labels is not None
                             else set(BUILTIN_LABELS),
                             allow_old, result)
        if ct != BOOL:
            raise SemaError("formula has type %s, expected a proposition"
                            % ct, getattr(e, "pos", None))
        return new

    def term(self, e: L.Expr, env: dict, labels=None):
        return self.annot(e, env,
                          labels if labels is not None
                          else set(BUILTIN_LABELS),
                          False, None)

    def int_term(self, e: L.Expr, env: dict, labels=None) -> L.Expr:
        new, ct = self.annot(e, env,
                             labels if labels is not None
                             else set(BUILTIN_LABELS) - {"Old"},
                             False, None)
        if ct != INT:
            raise SemaError("expected an integer term, got %s" % ct,
                            getattr(e, "pos", None))
        return new

    def annot(self, e: L.Expr, env, labels, allow_old, result):
        """Typecheck an annotation expression. env maps binder names to
        VarInfo; function locals are visible through self.scopes."""
        pos = getattr(e, "pos", None)
        rec = lambda x, t: (self.types.__setitem__(id(x), t), (x, t))[1]

        if isinstance(e, L.Ident):
            vi = env.get(e.name) or self.lookup(e.name)
            if vi is None:
                raise SemaError("unknown name %s in annotation" % e.name, pos)
            t = vi.type
            if t.is_machine():
                return rec(e, INT)
            return rec(e, t)
        if isinstance(e, L.IntConst):
            return rec(e, INT)
        if isinstance(e, L.BoolConst):
            return rec(e, BOOL)
        if isinstance(e, L.NullPtr):
            return rec(e, NULL)
        if isinstance(e, L.Result):
            if result is None:
                raise SemaError("\\result is only valid in ensures", pos)
            return rec(e, result)
        if isinstance(e, L.At):
            if e.label == "Old" and not allow_old:
                raise SemaError("\\old here; use \\at(.., Pre) or move to "
                                "ensures", pos)
            if e.label not in labels and e.label not in BUILTIN_LABELS:
                raise SemaError("unknown label %s" % e.label, pos)
            inner, t = self.annot(e.operand, env, labels, allow_old, result)
            return rec(L.At(inner, e.label, pos=pos), t)
        if isinstance(e, L.QuantExpr):
            inner_env = dict(env)
            binders = []
            for btype, name in e.binders:
                ct = ctype_of(btype, pos)
                if ct.kind == "bool":
                    raise SemaError("boolean binders are not supported", pos)
                view = INT if ct.is_machine() else ct
                if ct.is_ptr():
                    self.check_value_type(ct, pos, "binder %s" % name)
                if name in inner_env:
                    raise SemaError("rebound quantifier variable %s" % name,
                                    pos)
                inner_env[name] = VarInfo(view)
                binders.append((btype, name))
            body = self.annot(e.body, inner_env, labels, allow_old, result)
            if body[1] != BOOL:
                raise SemaError("quantifier body must be a proposition", pos)
            return rec(L.QuantExpr(e.kind, tuple(binders), body[0], pos=pos),
                       BOOL)
        if isinstance(e, L.Valid):
            base, bt = self.annot(e.base, env, labels, allow_old, result)
            if not bt.is_ptr():
                raise SemaError("\\valid needs a pointer", pos)
            lo = hi = None
            if e.lo is not None:
                lo, lt = self.annot(e.lo, env, labels, allow_old, result)
                hi, ht = self.annot(e.hi, env, labels, allow_old, result)
                if lt != INT or ht != INT:
                    raise SemaError("\\valid bounds must be integers", pos)
            return rec(L.Valid(base, lo, hi, pos=pos), BOOL)
        if isinstance(e, L.Unary):
            return self.annot_unary(e, env, labels, allow_old, result)
        if isinstance(e, L.Binary):
            return self.annot_binary(e, env, labels, allow_old, result)
        if isinstance(e, L.Ternary):
            cond, ctc = self.annot(e.cond, env, labels, allow_old, result)
            if ctc != BOOL:
                raise SemaError("ternary condition must be a proposition "
                                "in annotations", pos)
            then, t1 = self.annot(e.then, env, labels, allow_old, result)
            els, t2 = self.annot(e.els, env, labels, allow_old, result)
            if t1 != t2:
                t = self.merge_ptr(t1, t2, pos)
            else:
                t = t1
            return rec(L.Ternary(cond, then, els, pos=pos), t)
        if isinstance(e, L.Index):
            base, bt = self.annot(e.base, env, labels, allow_old, result)
            if not bt.is_ptr():
                raise SemaError("indexing a non-pointer", pos)
            idx, it = self.annot(e.index, env, labels, allow_old, result)
            if it != INT:
                raise SemaError("index must be an integer", pos)
            elem = bt.elem
            t = INT if elem.is_machine() else elem
            return rec(L.Index(base, idx, pos=pos), t)
        if isinstance(e, L.Cast):
            return self.annot_cast(e, env, labels, allow_old, result)
        if isinstance(e, L.Call):
            return self.annot_call(e, env, labels, allow_old, result)
        raise SemaError("unsupported annotation expression %s"
                        % type(e).__name__, pos)

    def annot_unary(self, e, env, labels, allow_old, result):
        pos = e.pos
        operand, ot = self.annot(e.operand, env, labels, allow_old, result)
        rec = lambda x, t: (self.types.__setitem__(id(x), t), (x, t))[1]
        if e.op == "-":
            if ot != INT:
                raise SemaError("- on %s" % ot, pos)
            new = L.Unary("-", operand, e.wrap, pos=pos)
            if e.wrap:
                self.wrap_widths[id(new)] = self.annot_width(operand, env,
                                                             pos)
            return rec(new, INT)
        if e.op == "!":
            if ot != BOOL:
                raise SemaError("! on %s (annotations need propositions)"
                                % ot, pos)
            return rec(L.Unary("!", operand, pos=pos), BOOL)
        if e.op == "*":
            if not ot.is_ptr():
                raise SemaError("dereferencing a non-pointer", pos)
            elem = ot.elem
            t = INT if elem.is_machine() else elem
            return rec(L.Unary("*", operand, pos=pos), t)
        raise SemaError("%s is not an annotation operator" % e.op, pos)

    def annot_binary(self, e, env, labels, allow_old, result):
        pos = e.pos
        rec = lambda x, t: (self.types.__setitem__(id(x), t), (x, t))[1]
        op = e.op
        # chained relations: a <= b < c means a <= b && b < c
        if op in RELATIONAL and isinstance(e.left, L.Binary) \
                and e.left.op in RELATIONAL:
            left, _ = self.annot(e.left, env, labels, allow_old, result)
            # the rebuilt left is either a plain relation or, for longer
            # chains, a conjunction whose right conjunct is one; the shared
            # middle term is its right operand
            mid = left.right.right if left.op == "&&" else left.right
            right, rt = self.annot(e.right, env, labels, allow_old, result)
            mt = self.types[id(mid)]
            if mt == INT and rt == INT:
                pass
            elif mt.is_ptr() and rt.is_ptr() and mt.elem.kind == rt.elem.kind:
                pass
            else:
                raise SemaError("cannot chain %s with %s" % (mt, rt), pos)
            second, _ = rec(L.Binary(op, mid, right, pos=pos), BOOL)
            return rec(L.Binary("&&", left, second, pos=pos), BOOL)

        left, lt = self.annot(e.left, env, labels, allow_old, result)
        right, rt = self.annot(e.right, env, labels, allow_old, result)

        if op in LOGICAL:
            if lt != BOOL or rt != BOOL:
                raise SemaError("%s on %s, %s" % (op, lt, rt), pos)
            return rec(L.Binary(op, left, right, pos=pos), BOOL)

        if op in EQUALITY:
            if lt == BOOL and rt == BOOL:
                return rec(L.Binary(op, left, right, pos=pos), BOOL)
            if lt == INT and rt == INT:
                return rec(L.Binary(op, left, right, pos=pos), BOOL)
            if (lt.is_ptr() or lt.kind == "null") and \
                    (rt.is_ptr() or rt.kind == "null"):
                self.merge_ptr(lt, rt, pos)
                return rec(L.Binary(op, left, right, pos=pos), BOOL)
            raise SemaError("%s on %s, %s" % (op, lt, rt), pos)

        if op in RELATIONAL:
            if lt == INT and rt == INT:
                return rec(L.Binary(op, left, right, pos=pos), BOOL)
            if lt.is_ptr() and rt.is_ptr() and lt.elem.kind == rt.elem.kind:
                return rec(L.Binary(op, left, right, pos=pos), BOOL)
            raise SemaError("%s on %s, %s" % (op, lt, rt), pos)

        if op in ("+", "-"):
            if lt.is_ptr() and rt == INT:
                return rec(L.Binary(op, left, right, pos=pos), lt)
            if op == "-" and lt.is_ptr() and rt.is_ptr() \
                    and lt.elem.kind == rt.elem.kind:
                return rec(L.Binary(op, left, right, pos=pos), INT)
            if op == "+" and lt == INT and rt.is_ptr():
                return rec(L.Binary(op, left, right, pos=pos), rt)

        if op in ARITH:
            if lt != INT or rt != INT:
                raise SemaError("%s on %s, %s" % (op, lt, rt), pos)
            new = L.Binary(op, left, right, e.wrap, pos=pos)
            if e.wrap:
                if op in ("/", "%"):
                    raise SemaError("wrap marker on division", pos)
                self.wrap_widths[id(new)] = self.annot_width2(
                    left, right, env, pos)
            return rec(new, INT)

        if op in SHIFTS:
            if lt != INT or rt != INT:
                raise SemaError("%s on %s, %s" % (op, lt, rt), pos)
            new = L.Binary(op, left, right, e.wrap, pos=pos)
            if e.wrap:
                self.wrap_widths[id(new)] = self.annot_width(left, env, pos)
            return rec(new, INT)

        if op in BITWISE:
            raise SemaError("bitwise %s is not available in annotations"
                            % op, pos)
        raise SemaError("bad operator %s" % op, pos)

    def annot_cast(self, e, env, labels, allow_old, result):
        pos = e.pos
        rec = lambda x, t: (self.types.__setitem__(id(x), t), (x, t))[1]
        ct = ctype_of(e.type, pos)
        operand, ot = self.annot(e.operand, env, labels, allow_old, result)
        if ct.is_ptr():
            if not (ot.is_ptr() and ot.elem.kind == ct.elem.kind) \
                    and ot.kind != "null":
                raise SemaError("bad pointer cast in annotation", pos)
            return rec(replace(e, operand=operand), ct if ot.kind != "null"
                       else NULL)
        if ct.kind == "int":
            if ot != INT:
                raise SemaError("(integer) cast on %s" % ot, pos)
            return rec(replace(e, operand=operand), INT)
        if not ct.is_machine():
            raise SemaError("cast to %s in annotation" % ct, pos)
        if ot != INT:
            raise SemaError("machine cast on %s" % ot, pos)
        if not e.wrap:
            raise SemaError("machine casts in annotations need the wrap "
                            "form (%s %%)" % e.type.base, pos)
        new = replace(e, operand=operand)
        self.wrap_widths[id(new)] = ct.kind
        return rec(new, INT)

    def annot_call(self, e, env, labels, allow_old, result):
        pos = e.pos
        rec = lambda x, t: (self.types.__setitem__(id(x), t), (x, t))[1]
        info = self.logics.get(e.name)
        if info is None or info.decl.kind not in ("logic", "predicate"):
            raise SemaError("unknown logic function %s" % e.name, pos)
        if e.label is not None:
            if e.label not in labels and e.label not in BUILTIN_LABELS:
                raise SemaError("unknown label %s" % e.label, pos)
            if e.label == "Old" and not allow_old:
                raise SemaError("label Old is only valid in ensures", pos)
        if len(e.args) != len(info.params):
            raise SemaError("%s expects %d arguments"
                            % (e.name, len(info.params)), pos)
        args = []
        for a, pt in zip(e.args, info.params):
            na, at = self.annot(a, env, labels, allow_old, result)
            want = INT if pt.is_machine() else pt
            if at != want and not (want.is_ptr() and at.kind == "null"):
                if not (want.is_ptr() and at.is_ptr()
                        and want.elem.kind == at.elem.kind):
                    raise SemaError("argument of %s has type %s, expected %s"
                                    % (e.name, at, want), pos)
            args.append(na)
        new = L.Call(e.name, tuple(args), e.label, pos=pos)
        if info.ret is None:
            return rec(new, BOOL)
        return rec(new, INT if info.ret.is_machine() else info.ret)

    # width inference for wrap operators in annotations

    def annot_width(self, e: L.Expr, env, pos) -> str:
        k = self.machine_kind_of(e, env)
        if k is None:
            raise SemaError("cannot infer the machine width of this wrap "
                            "operation; add a (type %) cast", pos)
        return k

    def annot_width2(self, a, b, env, pos) -> str:
        k1 = self.machine_kind_of(a, env)
        k2 = self.machine_kind_of(b, env)
        if k1 is None and k2 is None:
            raise SemaError("cannot infer the machine width of this wrap "
                            "operation; add a (type %) cast", pos)
        if k1 is None:
            return k2
        if k2 is None:
            return k1
        return usual_arith(k1, k2)

    def machine_kind_of(self, e: L.Expr, env) -> Optional[str]:
        if isinstance(e, L.Ident):
            vi = env.get(e.name) or self.lookup(e.name)
            if vi and vi.type.is_machine():
                return vi.type.kind
            return None
        if isinstance(e, L.Cast) and e.wrap:
            ct = ctype_of(e.type, e.pos)
            return ct.kind if ct.is_machine() else None
        if isinstance(e, L.At):
            return self.machine_kind_of(e.operand, env)
        if isinstance(e, (L.Unary,)) and e.op == "*":
            inner = self.machine_kind_of_ptr_elem(e.operand, env)
            return inner
        if isinstance(e, L.Index):
            return self.machine_kind_of_ptr_elem(e.base, env)
        if isinstance(e, L.Binary) and e.wrap:
            if e.op in SHIFTS:
                return self.machine_kind_of(e.left, env)
            k1 = self.machine_kind_of(e.left, env)
            k2 = self.machine_kind_of(e.right, env)
            if k1 and k2:
                return usual_arith(k1, k2)
            return k1 or k2
        return None

    def machine_kind_of_ptr_elem(self, e, env) -> Optional[str]:
        t = self.types.get(id(e))
        if t is not None and t.is_ptr() and t.elem.is_machine():
            return t.elem.kind
        if isinstance(e, L.Ident):
            vi = env.get(e.name) or self.lookup(e.name)
            if vi and vi.type.is_ptr() and vi.type.elem.is_machine():
                return vi.type.elem.kind
        return None


def literal_kind(e: L.IntConst, pos) -> str:
    if e.char:
        return "i32"
    if e.suffix in ("U",):
        return "u32" if e.value <= 0xFFFFFFFF else "u64"
    if e.suffix in ("UL", "ULL"):
        return "u64"
    if e.suffix in ("L", "LL"):
        return "i64"
    if e.value <= 0x7FFFFFFF:
        return "i32"
    if e.hex and e.value <= 0xFFFFFFFF:
        return "u32"
    if e.value <= 0x7FFFFFFFFFFFFFFF:
        return "i64"
    if e.hex and e.value <= 0xFFFFFFFFFFFFFFFF:
        return "u64"
    raise SemaError("integer constant does not fit any machine type", pos)


def analyze(unit: L.AnnotatedUnit) -> SemaResult:
    return Sema(unit).run()
