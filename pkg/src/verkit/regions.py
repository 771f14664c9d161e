"""Region inference.

Pointer expressions are partitioned into regions: two pointers land in the
same region only when the code or the annotations make them interact
(assignment, arithmetic between them, comparison, flowing through the same
call parameter, or an explicit `//@ unify a b;`). The memory model gives
every region its own pointer sort and its own byte store, so separation is
structural: distinct regions cannot alias by construction.

Logic declarations are region polymorphic. Their parameters are partitioned
the same way, and every application instantiates the declaration's region
parameters with the caller's regions; the emitter monomorphizes."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import lang as L
from .sema import SemaResult, CType

RESULT = "\\result"


class _UF:
    """Union-find whose classes may carry an `elem` pointer (the region of
    the pointees, for pointer-to-pointer variables). Merging two classes
    merges their elem classes recursively."""

    def __init__(self):
        self.parent: dict = {}
        self.elem: dict = {}

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x

    def find(self, x):
        self.add(x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        self.parent[rb] = ra
        ea, eb = self.elem.pop(ra, None), self.elem.pop(rb, None)
        if ea is not None and eb is not None:
            self.elem[ra] = self.union(ea, eb)
        elif ea is not None or eb is not None:
            self.elem[ra] = ea if ea is not None else eb
        return ra

    def elem_of(self, x):
        r = self.find(x)
        if r not in self.elem:
            e = ("elem", r)
            self.add(e)
            self.elem[r] = e
        return self.find(self.elem[r])


@dataclass
class Signature:
    """Region behaviour of a callable: which of its parameter positions
    (and possibly "ret") share a region, and which positions have linked
    elem regions."""
    groups: list = field(default_factory=list)   # list of lists of keys
    # keys are ints (param positions) or "ret"; elem links appear as
    # ("elem", key) entries inside groups


@dataclass
class FnRegions:
    name: str
    var_region: dict = field(default_factory=dict)   # var name -> region id
    elem: dict = field(default_factory=dict)         # region id -> region id
    elem_kind: dict = field(default_factory=dict)    # region id -> kind str
    classes: list = field(default_factory=list)      # [[var name, ...], ...]
    binder_region: dict = field(default_factory=dict)  # (node id, name) -> id

    def region_count(self):
        return len(self.classes)


@dataclass
class LogicRegionInfo:
    """Region polymorphism of a logic declaration: its pointer parameters
    and binders partition into `nclasses` region parameters."""
    nclasses: int = 0
    param_class: dict = field(default_factory=dict)   # param pos -> class
    binder_class: dict = field(default_factory=dict)  # (node id, name) -> class
    elem_kind: dict = field(default_factory=dict)     # class -> pointee kind


@dataclass
class RegionResult:
    functions: dict                  # fn name -> FnRegions
    signatures: dict                 # fn name -> Signature
    logic_sigs: dict                 # logic name -> Signature (params only)
    logic_info: dict                 # logic/axiom name -> LogicRegionInfo

    def dump(self) -> dict:
        return {name: fr.classes for name, fr in sorted(self.functions.items())}


def _ptr(t: CType) -> bool:
    return t is not None and t.is_ptr()


class _Walker:
    """Unifies the pointer expressions of one function or logic body."""

    def __init__(self, sema: SemaResult, sigs, logic_sigs):
        self.sema = sema
        self.sigs = sigs
        self.logic_sigs = logic_sigs
        self.uf = _UF()
        self.binder_kinds: dict = {}

    def t(self, e):
        return self.sema.types.get(id(e))

    # returns the region key of a pointer expression, or None

    def expr(self, e):
        if e is None or not isinstance(e, L.Expr):
            return None
        if isinstance(e, L.Ident):
            if _ptr(self.t(e)):
                return self.uf.find(("v", e.name))
            return None
        if isinstance(e, L.NullPtr):
            return None
        if isinstance(e, L.Result):
            if _ptr(self.t(e)):
                return self.uf.find(("v", RESULT))
            return None
        if isinstance(e, L.At):
            return self.expr(e.operand)
        if isinstance(e, L.Cast):
            return self.expr(e.operand)
        if isinstance(e, L.Unary):
            r = self.expr(e.operand)
            if e.op == "*" and r is not None:
                if _ptr(self.t(e)):
                    return self.uf.elem_of(r)
                return None
            return r if _ptr(self.t(e)) else None
        if isinstance(e, L.Index):
            r = self.expr(e.base)
            self.expr(e.index)
            if _ptr(self.t(e)) and r is not None:
                return self.uf.elem_of(r)
            return None
        if isinstance(e, L.Binary):
            rl, rr = self.expr(e.left), self.expr(e.right)
            if rl is not None and rr is not None:
                # two pointers interact only through comparison or
                # difference; && and || look at each in isolation
                if e.op in ("-", "<", "<=", ">", ">=", "==", "!="):
                    self.uf.union(rl, rr)
                return None
            if _ptr(self.t(e)):
                return rl if rl is not None else rr
            return None
        if isinstance(e, L.Ternary):
            self.expr(e.cond)
            rl, rr = self.expr(e.then), self.expr(e.els)
            if rl is not None and rr is not None:
                return self.uf.union(rl, rr)
            return rl if rl is not None else rr
        if isinstance(e, (L.Assign, L.CompoundAssign)):
            rt, rv = self.lhs(e.target), self.expr(e.value)
            if rt is not None and rv is not None:
                return self.uf.union(rt, rv)
            return rt
        if isinstance(e, L.IncDec):
            return self.lhs(e.target)
        if isinstance(e, L.Call):
            return self.call(e)
        if isinstance(e, L.QuantExpr):
            return self._quant(e)
        if isinstance(e, L.Valid):
            self.expr(e.base)
            self.expr(e.lo)
            self.expr(e.hi)
            return None
        if isinstance(e, (L.IntConst, L.BoolConst)):
            return None
        raise TypeError("unhandled expr %s" % type(e).__name__)

    # quantifier binders shadow variables of the same name for the body walk

    def _quant(self, e: L.QuantExpr):
        binder_keys = {}
        for btype, name in e.binders:
            if btype.ptr > 0:
                key = ("q", id(e), name)
                binder_keys[name] = key
                self.uf.add(key)
                base = {"char": "i8", "u8": "u8"}.get(btype.base, btype.base)
                self.binder_kinds[(id(e), name)] = \
                    "ptr" if btype.ptr > 1 else base
        saved = self.expr

        def shadowed(x):
            if isinstance(x, L.Ident) and x.name in binder_keys \
                    and _ptr(self.t(x)):
                return self.uf.find(binder_keys[x.name])
            return saved(x)

        self.expr = shadowed
        try:
            self.expr(e.body)
        finally:
            self.expr = saved
        return None

    def lhs(self, e):
        return self.expr(e)

    def call(self, e: L.Call):
        arg_regions = [self.expr(a) for a in e.args]
        sig = self.sigs.get(e.name) or self.logic_sigs.get(e.name)
        ret_region = None
        if sig is not None:
            for group in sig.groups:
                keys = [self.sig_key_region(k, arg_regions) for k in group]
                present = [k for k in keys if k is not None]
                merged = None
                for k in present:
                    merged = k if merged is None else self.uf.union(merged, k)
                if merged is not None and "ret" in group:
                    ret_region = merged
        if ret_region is None and _ptr(self.t(e)):
            ret_region = self.uf.find(("call", id(e)))
        return ret_region

    def sig_key_region(self, k, arg_regions):
        if k == "ret":
            return None
        if isinstance(k, tuple) and k[0] == "elem":
            base = self.sig_key_region(k[1], arg_regions)
            return None if base is None else self.uf.elem_of(base)
        if isinstance(k, int):
            if k < len(arg_regions):
                return arg_regions[k]
        return None

    # statements

    def stmt(self, s):
        if isinstance(s, L.DeclStmt):
            if s.type.ptr > 0:
                rv = self.uf.find(("v", s.name))
                if s.init is not None:
                    ri = self.expr(s.init)
                    if ri is not None:
                        self.uf.union(rv, ri)
            elif s.init is not None:
                self.expr(s.init)
            return
        if isinstance(s, L.ExprStmt):
            self.expr(s.expr)
            return
        if isinstance(s, L.AssertStmt):
            self.expr(s.formula)
            return
        if isinstance(s, L.UnifyPragma):
            self.uf.union(("v", s.left), ("v", s.right))
            return
        if isinstance(s, L.Block):
            for x in s.stmts:
                self.stmt(x)
            return
        if isinstance(s, L.If):
            self.expr(s.cond)
            for x in s.then:
                self.stmt(x)
            for x in s.els:
                self.stmt(x)
            return
        if isinstance(s, (L.While, L.DoWhile)):
            self.expr(s.cond)
            self.spec(s.spec)
            for x in s.body:
                self.stmt(x)
            return
        if isinstance(s, L.For):
            for item in (s.init or ()):
                if isinstance(item, L.DeclStmt):
                    self.stmt(item)
                else:
                    self.expr(item)
            self.spec(s.spec)
            if s.cond is not None:
                self.expr(s.cond)
            for x in (s.step or ()):
                self.expr(x)
            for x in s.body:
                self.stmt(x)
            return
        if isinstance(s, L.Return):
            if s.value is not None:
                rv = self.expr(s.value)
                if rv is not None:
                    self.uf.union(("v", RESULT), rv)
            return
        if isinstance(s, (L.Break, L.Continue)):
            return
        raise TypeError("unhandled stmt %s" % type(s).__name__)

    def spec(self, spec):
        if spec is None:
            return
        for inv in spec.invariants:
            self.expr(inv)
        if spec.variant is not None:
            self.expr(spec.variant)


def _function_regions(sema: SemaResult, fn, sigs, logic_sigs) -> tuple:
    """Returns (FnRegions, Signature)."""
    w = _Walker(sema, sigs, logic_sigs)
    info = sema.funcs[fn.name]
    for p, ct in zip(fn.params, info.params):
        if ct.is_ptr():
            w.uf.add(("v", p.name))
    if info.ret.is_ptr():
        w.uf.add(("v", RESULT))
    c = fn.contract
    for r in c.requires:
        w.expr(r)
    for a in (c.assigns or ()):
        w.expr(a.base)
        w.expr(a.lo)
        w.expr(a.hi)
    for r in c.ensures:
        w.expr(r)
    for b in c.behaviors:
        for r in b.assumes:
            w.expr(r)
        for r in b.ensures:
            w.expr(r)
    for s in (fn.body or ()):
        w.stmt(s)

    # collect named classes deterministically
    names = [p.name for p in fn.params if ("v", p.name) in w.uf.parent]
    names += [n for n in info.locals
              if n not in {p.name for p in fn.params}
              and ("v", n) in w.uf.parent]
    if ("v", RESULT) in w.uf.parent:
        names.append(RESULT)

    fr = FnRegions(fn.name)
    root_to_id: dict = {}
    by_root: dict = {}
    for n in names:
        root = w.uf.find(("v", n))
        by_root.setdefault(root, []).append(n)
    for n in names:
        root = w.uf.find(("v", n))
        if root not in root_to_id:
            root_to_id[root] = len(fr.classes)
            fr.classes.append(sorted(by_root[root]))
        fr.var_region[n] = root_to_id[root]

    # elem kinds and elem regions
    def kind_of_var(n):
        if n == RESULT:
            return info.ret
        if n in info.locals:
            return info.locals[n].type
        return None

    for n in names:
        ct = kind_of_var(n)
        rid = fr.var_region[n]
        if ct is None or not ct.is_ptr():
            continue
        ek = ct.elem
        fr.elem_kind.setdefault(rid, "ptr" if ek.is_ptr() else ek.kind)
        if ek.is_ptr():
            eroot = w.uf.elem_of(("v", n))
            if eroot not in root_to_id:
                root_to_id[eroot] = len(fr.classes)
                fr.classes.append(["*" + n])
            fr.elem[rid] = root_to_id[eroot]
            fr.elem_kind.setdefault(root_to_id[eroot],
                                    "ptr" if ek.elem.is_ptr() else ek.elem.kind)

    # pointer binders in the contract and body annotations: resolve each to
    # the class it unified with, or give it a region of its own
    for key in list(w.uf.parent):
        if isinstance(key, tuple) and key[0] == "q":
            root = w.uf.find(key)
            if root not in root_to_id:
                root_to_id[root] = len(fr.classes)
                fr.classes.append(["<quantified %s>" % key[2]])
            rid = root_to_id[root]
            fr.binder_region[(key[1], key[2])] = rid
            fr.elem_kind.setdefault(rid, w.binder_kinds.get((key[1], key[2])))

    # signature: partition over parameter positions, their elem regions
    # (for pointer-to-pointer parameters) and ret
    sig = Signature()
    pos_of = {p.name: i for i, p in enumerate(fn.params)}
    groups: dict = {}
    for n in names:
        if n in pos_of or n == RESULT:
            root = w.uf.find(("v", n))
            key = pos_of.get(n, "ret")
            groups.setdefault(root, []).append(key)
            ct = kind_of_var(n)
            if ct is not None and ct.is_ptr() and ct.elem.is_ptr():
                eroot = w.uf.elem_of(("v", n))
                groups.setdefault(eroot, []).append(("elem", key))
    for root, keys in groups.items():
        if len(keys) > 1:
            sig.groups.append(sorted(keys, key=str))
    return fr, sig


def _kind_str(t: L.TypeExpr) -> str:
    if t.ptr > 1:
        return "ptr"
    base = {"char": "i8", "u8": "u8"}.get(t.base, t.base)
    return base


def _logic_regions(sema: SemaResult, d: L.LogicDecl, logic_sigs):
    """Returns (Signature, LogicRegionInfo) for one logic declaration."""
    w = _Walker(sema, {}, logic_sigs)
    for p in d.params:
        if p.type.ptr > 0:
            w.uf.add(("v", p.name))
    if d.body is not None:
        w.expr(d.body)

    info = LogicRegionInfo()
    root_to_class: dict = {}

    def class_of(root):
        if root not in root_to_class:
            root_to_class[root] = info.nclasses
            info.nclasses += 1
        return root_to_class[root]

    sig = Signature()
    groups: dict = {}
    for i, p in enumerate(d.params):
        if ("v", p.name) in w.uf.parent:
            root = w.uf.find(("v", p.name))
            cls = class_of(root)
            info.param_class[i] = cls
            info.elem_kind.setdefault(cls, _kind_str(p.type))
            groups.setdefault(root, []).append(i)
    for key in list(w.uf.parent):
        if isinstance(key, tuple) and key[0] == "q":
            root = w.uf.find(key)
            cls = class_of(root)
            info.binder_class[(key[1], key[2])] = cls
            info.elem_kind.setdefault(cls,
                                      w.binder_kinds.get((key[1], key[2])))
    for root, keys in groups.items():
        if len(keys) > 1:
            sig.groups.append(keys)
    return sig, info


def infer(sema: SemaResult) -> RegionResult:
    # logic declarations first: their signatures feed every body walk
    logic_sigs: dict = {}
    logic_info: dict = {}
    for d in sema.unit.logic_decls():
        sig, info = _logic_regions(sema, d, logic_sigs)
        logic_info[d.name] = info
        if d.kind in ("logic", "predicate"):
            logic_sigs[d.name] = sig

    # functions in callee-first order
    fns = sema.unit.functions()
    order = _topo_order(fns)
    sigs: dict = {}
    functions: dict = {}
    for fn in order:
        fr, sig = _function_regions(sema, fn, sigs, logic_sigs)
        functions[fn.name] = fr
        sigs[fn.name] = sig
    return RegionResult(functions, sigs, logic_sigs, logic_info)


def _topo_order(fns):
    byname = {f.name: f for f in fns}
    callees: dict = {}

    def calls_in(e, out):
        if isinstance(e, L.Call) and e.name in byname:
            out.add(e.name)
        for f in getattr(e, "__dataclass_fields__", {}):
            v = getattr(e, f)
            if isinstance(v, (L.Expr, L.Stmt)):
                calls_in(v, out)
            elif isinstance(v, tuple):
                for x in v:
                    if isinstance(x, (L.Expr, L.Stmt)):
                        calls_in(x, out)

    for f in fns:
        out: set = set()
        for s in (f.body or ()):
            calls_in(s, out)
        callees[f.name] = out

    seen: set = set()
    order = []

    def visit(name, stack):
        if name in seen:
            return
        if name in stack:
            raise ValueError("recursive call cycle through %s" % name)
        stack.add(name)
        for c in sorted(callees[name]):
            visit(c, stack)
        stack.discard(name)
        seen.add(name)
        order.append(byname[name])

    for f in fns:
        visit(f.name, set())
    return order
