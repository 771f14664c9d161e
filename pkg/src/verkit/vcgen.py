"""Verification condition generation.

Forward symbolic execution over the typed tree. Scalars are bound to SMT
terms directly (static single assignment falls out of the functional state),
memory is one array term per region, and every operation that carries a
proof obligation emits a goal made of the path hypotheses plus the
obligation.

Integer encoding follows the selected model. Under `combined`, every machine
operation result z gets an integer-rail post (z = x + y, or z = norm(x + y)
for wrap operations) when one exists, and a bitvector image linked through
to_int$kind; equalities between values whose definitions live on different
rails resolve through congruence on the links.

Loops are cut at the invariant: initial goals at entry, havoc of everything
the body can write, invariant assumed, preservation and variant goals at
every back edge. Havocked memory keeps everything outside the function's
assigns footprint, which is sound because each store site proves membership
of its target in that footprint.

Calls are modular: the callee's requires become goals, its footprint is
havocked, and its ensures are assumed with the callee's regions mapped onto
the caller's through the argument positions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import lang as L
from . import smt as S
from .intmodel import IntEnc, bvsort
from .memmodel import RegionEnc
from .regions import RegionResult, RESULT
from .sema import SemaResult, CType, kind_range, KIND_BITS, SIGNED_KINDS

BYTE_KINDS = ("i8", "u8")

# annotation binder bases to machine kinds, for range guards
_BINDER_KINDS = {"char": "i8", "u8": "u8", "int": "i32",
                 "unsigned": "u32", "size_t": "u64", "u64": "u64"}


class VCError(Exception):
    pass


@dataclass(frozen=True)
class Goal:
    name: str
    fn: str
    kind: str
    hyps: tuple
    concl: S.Term
    pos: object = None

    def term(self) -> S.Term:
        """The goal as one closed implication."""
        if not self.hyps:
            return self.concl
        return S.implies(S.conj(*self.hyps), self.concl)


@dataclass
class Snapshot:
    vars: dict
    mems: dict


@dataclass
class FnVC:
    """Everything the emitter needs for one function's goals."""
    name: str
    goals: list = field(default_factory=list)
    regions: dict = field(default_factory=dict)      # rid -> RegionEnc
    axioms: list = field(default_factory=list)       # [(name, Term)]

    def axiom(self, name: str, term: S.Term):
        if all(n != name for n, _ in self.axioms):
            self.axioms.append((name, term))


class PathState:
    __slots__ = ("vars", "mems", "hyps", "labels", "bvs", "writes")

    def __init__(self, vars, mems, hyps, labels, bvs, writes=0):
        self.vars = vars          # name -> Term
        self.mems = mems          # rid -> Term
        self.hyps = hyps          # list[Term]
        self.labels = labels      # label -> Snapshot
        self.bvs = bvs            # (term key, kind) -> Term
        self.writes = writes      # mutation counter, for guard checks

    def fork(self) -> "PathState":
        return PathState(dict(self.vars), dict(self.mems), list(self.hyps),
                         dict(self.labels), dict(self.bvs), self.writes)

    def snap(self) -> Snapshot:
        return Snapshot(dict(self.vars), dict(self.mems))


class VCGen:
    """Shared across the functions of one unit: logic instantiations and
    the integer encoding accumulate."""

    def __init__(self, sema: SemaResult, regions: RegionResult,
                 model: Optional[str] = None):
        self.sema = sema
        self.reg = regions
        self.enc = IntEnc(model or sema.int_model)
        self.logic_insts: dict = {}   # (name, rho) -> (FunDecl, def axiom)

    def function(self, name: str) -> FnVC:
        fn = self.sema.funcs[name].decl
        if fn.body is None:
            raise VCError("%s has no body" % name)
        return _Exec(_FnBuilder(self, fn)).run()


def generate(sema: SemaResult, regions: RegionResult, name: str,
             model: Optional[str] = None) -> FnVC:
    return VCGen(sema, regions, model).function(name)


def generate_unit(sema: SemaResult, regions: RegionResult,
                  model: Optional[str] = None) -> dict:
    gen = VCGen(sema, regions, model)
    out = {}
    for fn in sema.unit.functions():
        if fn.body is not None:
            out[fn.name] = gen.function(fn.name)
    return out


def _strip_at(e):
    while isinstance(e, (L.At, L.Cast)):
        e = e.operand
    return e


def _strip_implicit(e):
    while isinstance(e, L.Cast) and e.implicit:
        e = e.operand
    return e


def _shamt(e):
    lit = _strip_implicit(e)
    return lit.value if isinstance(lit, L.IntConst) else None


def _promote_kind(kind):
    return "i32" if kind in ("i8", "u8") else kind


def _widening(src, dst):
    lo1, hi1 = kind_range(src)
    lo2, hi2 = kind_range(dst)
    return lo2 <= lo1 and hi1 <= hi2


class _FnBuilder:
    def __init__(self, gen: VCGen, fn: L.FunctionDef):
        self.gen = gen
        self.sema = gen.sema
        self.enc = gen.enc
        self.fn = fn
        self.info = gen.sema.funcs[fn.name]
        self.fr = gen.reg.functions[fn.name]
        self.names = S.NameGen()
        self.vc = FnVC(fn.name)
        self.counters: dict = {}
        self.guards: list = []
        self.encs: dict = {}          # rid -> RegionEnc
        self.footprint = None         # rid -> [(base, lo, hi)] | None
        self.pre: Optional[Snapshot] = None
        for rid in range(len(self.fr.classes)):
            self.region_enc(rid)

    # ------------------------------------------------------------ plumbing

    def region_enc(self, rid: int) -> RegionEnc:
        if rid in self.encs:
            return self.encs[rid]
        kind = self.fr.elem_kind.get(rid)
        if kind == "ptr":
            value_sort = self.region_enc(self.fr.elem[rid]).sort
        else:
            value_sort = S.INT
        enc = RegionEnc("r%d" % rid, value_sort)
        self.encs[rid] = enc
        self.vc.regions[rid] = enc
        for name, term in enc.axioms():
            self.vc.axiom(name, term)
        return enc

    def goal(self, kind: str, concl: S.Term, st: PathState, pos=None):
        n = self.counters.get(kind, 0)
        self.counters[kind] = n + 1
        name = "%s__%s__%d" % (self.fn.name, kind, n)
        hyps = tuple(st.hyps) + tuple(self.guards)
        self.vc.goals.append(Goal(name, self.fn.name, kind, hyps, concl, pos))

    def fresh(self, base: str, sort: S.Sort) -> S.Const:
        return S.Const(self.names.fresh(base), sort)

    def assume(self, st: PathState, fact: S.Term):
        """Path assumption. Facts learned inside a short-circuited operand
        only hold when the guard does."""
        if self.guards:
            fact = S.implies(S.conj(*self.guards), fact)
        st.hyps.append(fact)

    def bind_int(self, st: PathState, base: str, kind: str,
                 value: Optional[S.Term]) -> S.Const:
        """Fresh integer-rail constant, equal to `value` when given, always
        carrying its kind bounds."""
        c = self.fresh(base, S.INT)
        if value is not None:
            self.assume(st, S.eq(c, value))
        self.assume(st, self.enc.in_bounds_term(kind, c))
        return c

    def bv_image(self, st: PathState, t: S.Term, kind: str) -> S.Term:
        if isinstance(t, S.IntLit):
            return S.BVLit(t.value, KIND_BITS[kind])
        key = (t.key(), kind)
        if key in st.bvs:
            return st.bvs[key]
        c = self.fresh("bv", bvsort(kind))
        st.hyps.append(S.eq(self.enc.to_int(kind)(c), t))
        st.bvs[key] = c
        return c

    def link_bv(self, st: PathState, value: S.Term, kind: str,
                bv_term: S.Term):
        st.bvs[(value.key(), kind)] = bv_term
        st.hyps.append(S.eq(self.enc.to_int(kind)(bv_term), value))

    def mem_range_hyp(self, st: PathState, rid: int, mem: S.Term):
        """All cells of a byte region's array are in the byte's range."""
        kind = self.fr.elem_kind.get(rid)
        if kind not in BYTE_KINDS:
            return
        p = self.fresh("p", self.encs[rid].sort)
        st.hyps.append(S.forall(
            [p], self.enc.in_bounds_term(kind, S.select(mem, p)),
            [S.select(mem, p)]))

    def new_mem(self, st: PathState, rid: int) -> S.Term:
        m = self.fresh("mem$r%d" % rid, self.encs[rid].mem_sort)
        self.mem_range_hyp(st, rid, m)
        return m

    def havoc_mem(self, st: PathState, rid: int,
                  entries: Optional[list]) -> None:
        """Replace a region's memory; when `entries` is given, everything
        outside those footprint ranges keeps its old value."""
        enc = self.encs[rid]
        m2 = self.new_mem(st, rid)
        if entries is not None:
            p = self.fresh("p", enc.sort)
            outside = S.conj(*[S.neg(enc.in_footprint(p, b, lo, hi))
                               for (b, lo, hi) in entries])
            st.hyps.append(S.forall(
                [p], S.implies(outside, S.eq(S.select(m2, p),
                                             S.select(st.mems[rid], p))),
                [S.select(m2, p), S.select(st.mems[rid], p)]))
        st.mems[rid] = m2
        st.writes += 1

    # region of a pointer expression, resolved structurally

    def region_of(self, e, binders=None, region_env=None, fr=None) -> int:
        fr = fr or self.fr
        binders = binders or {}
        if isinstance(e, L.Ident):
            if e.name in binders:
                rid = binders[e.name][1]
                if rid is None:
                    raise VCError("%s is not a pointer binder" % e.name)
                return rid
            if region_env is not None:
                if e.name in region_env:
                    return region_env[e.name]
                raise VCError("region of %s not mapped here" % e.name)
            if e.name in fr.var_region:
                return fr.var_region[e.name]
            raise VCError("no region for %s" % e.name)
        if isinstance(e, L.Result):
            if region_env is not None:
                if RESULT in region_env:
                    return region_env[RESULT]
                raise VCError("\\result region not mapped here")
            return fr.var_region[RESULT]
        if isinstance(e, (L.At, L.Cast)):
            return self.region_of(e.operand, binders, region_env, fr)
        if isinstance(e, (L.IncDec, L.Assign, L.CompoundAssign)):
            return self.region_of(e.target, binders, region_env, fr)
        if isinstance(e, L.Binary):
            lt = self.sema.types.get(id(e.left))
            side = e.left if (lt is not None and lt.is_ptr()) else e.right
            return self.region_of(side, binders, region_env, fr)
        if isinstance(e, L.Ternary):
            arm = e.then if not isinstance(e.then, L.NullPtr) else e.els
            return self.region_of(arm, binders, region_env, fr)
        if isinstance(e, L.Unary) and e.op == "*":
            return self.elem_region(
                self.region_of(e.operand, binders, region_env, fr),
                region_env, fr)
        if isinstance(e, L.Index):
            return self.elem_region(
                self.region_of(e.base, binders, region_env, fr),
                region_env, fr)
        if isinstance(e, L.Call):
            raise VCError("pointer-valued logic application")
        raise VCError("cannot resolve the region of %s" % type(e).__name__)

    def elem_region(self, rid: int, region_env, fr) -> int:
        if region_env is None and fr is self.fr:
            return self.fr.elem[rid]
        raise VCError("element region through a mapped contract")

    def ctype(self, e) -> CType:
        t = self.sema.types.get(id(e))
        if t is None:
            raise VCError("untyped expression %s" % type(e).__name__)
        return t

    # -------------------------------------------------- annotation entry

    def annot(self, e, st_or_snap, binders=None, labels=None, result=None,
              env=None, region_env=None, fr=None,
              binder_region=None) -> S.Term:
        """Translate a typed annotation expression to a term.

        `st_or_snap` gives the Here state, `labels` maps label names to
        snapshots. `env` overrides variable lookup and `region_env` the
        region lookup (used when a callee contract is instantiated at a
        call site); `binder_region` maps (node id, name) to a region for
        quantified pointers."""
        here = st_or_snap.snap() if isinstance(st_or_snap, PathState) \
            else st_or_snap
        tr = _AnnotTr(self, here, labels or {}, result, env,
                      region_env, fr or self.fr,
                      binder_region if binder_region is not None
                      else self.fr.binder_region)
        return tr.tr(e, binders or {})

    # ------------------------------------------- unit axiom instantiation

    def instantiate_unit_axioms(self):
        """Instantiate every axiom and lemma of the unit at each tuple of
        this function's regions whose element kinds fit. Goal emission
        filters unused instances by symbol reachability."""
        fn_kinds = {rid: self.fr.elem_kind.get(rid)
                    for rid in range(len(self.fr.classes))}
        for name, li in self.sema.logics.items():
            d = li.decl
            if d.kind not in ("axiom", "lemma"):
                continue
            info = self.gen.reg.logic_info[name]
            cands = []
            for cls in range(info.nclasses):
                want = info.elem_kind.get(cls)
                cands.append([rid for rid, k in sorted(fn_kinds.items())
                              if want is None or k is None or k == want])
            for rho in itertools.product(*cands):
                self.instantiate_axiom(d, info, rho)

    def instantiate_axiom(self, d: L.LogicDecl, info, rho: tuple):
        aname = d.name + "".join("$r%d" % r for r in rho)
        if any(n == aname for n, _ in self.vc.axioms):
            return
        mvars, mems = [], {}
        for _lbl in d.labels:
            for rid in rho:
                m = self.fresh("m", self.region_enc(rid).mem_sort)
                mvars.append(m)
                mems[rid] = m
        snap = Snapshot({}, mems)
        labels = {lbl: snap for lbl in d.labels}
        breg = {k: rho[cls] for k, cls in info.binder_class.items()}
        try:
            body = self.annot(d.body, snap, labels=labels, env={},
                              binder_region=breg)
        except VCError:
            return      # instance does not fit these regions
        self.vc.axiom(aname, S.forall(mvars, body))


class _AnnotTr:
    def __init__(self, fb, here, labels, result, env, region_env, fr,
                 binder_region):
        self.fb = fb
        self.enc = fb.enc
        self.here = here
        self.labels = labels
        self.result = result
        self.env = env or {}
        self.region_env = region_env
        self.fr = fr
        self.binder_region = binder_region

    def t(self, e) -> CType:
        return self.fb.ctype(e)

    def region(self, e, binders):
        return self.fb.region_of(e, binders, self.region_env, self.fr)

    def mem(self, rid):
        try:
            return self.here.mems[rid]
        except KeyError:
            raise VCError("no memory for region r%d here" % rid)

    def lookup(self, name, binders):
        if name in binders:
            return binders[name][0]
        if name in self.env:
            return self.env[name]
        if name in self.here.vars:
            return self.here.vars[name]
        raise VCError("unbound %s in annotation" % name)

    def snapshot(self, label):
        if label == "Here":
            return self.here
        snap = self.labels.get(label)
        if snap is None:
            raise VCError("label %s has no state here" % label)
        return snap

    def tr(self, e, binders) -> S.Term:
        if isinstance(e, L.Ident):
            return self.lookup(e.name, binders)
        if isinstance(e, L.IntConst):
            return S.IntLit(e.value)
        if isinstance(e, L.BoolConst):
            return S.TRUE if e.value else S.FALSE
        if isinstance(e, L.Result):
            if self.result is None:
                raise VCError("\\result has no value here")
            return self.result
        if isinstance(e, L.At):
            saved, self.here = self.here, self.snapshot(e.label)
            try:
                return self.tr(e.operand, binders)
            finally:
                self.here = saved
        if isinstance(e, L.Unary):
            return self.unary(e, binders)
        if isinstance(e, L.Binary):
            return self.binary(e, binders)
        if isinstance(e, L.Ternary):
            c = self.tr(e.cond, binders)
            return S.ite(c, self.tr(e.then, binders),
                         self.tr(e.els, binders))
        if isinstance(e, L.Index):
            rid = self.region(e.base, binders)
            enc = self.fb.encs[rid]
            return S.select(self.mem(rid),
                            enc.shift(self.tr(e.base, binders),
                                      self.tr(e.index, binders)))
        if isinstance(e, L.Cast):
            inner = self.tr(e.operand, binders)
            kind = self.fb.sema.wrap_widths.get(id(e))
            if kind is not None:
                return self.enc.norm_term(kind, inner)
            ct = self.t(e)
            if ct.is_ptr() or not ct.is_machine():
                return inner
            raise VCError("plain machine cast in an annotation")
        if isinstance(e, L.QuantExpr):
            return self.quant(e, binders)
        if isinstance(e, L.Valid):
            rid = self.region(e.base, binders)
            enc = self.fb.encs[rid]
            base = self.tr(e.base, binders)
            if e.lo is None:
                return enc.valid_one(base)
            return enc.valid_range(base, self.tr(e.lo, binders),
                                   self.tr(e.hi, binders))
        if isinstance(e, L.Call):
            return self.call(e, binders)
        if isinstance(e, L.NullPtr):
            raise VCError("\\null needs a pointer comparison context")
        raise VCError("untranslatable annotation %s" % type(e).__name__)

    def unary(self, e, binders):
        if e.op == "!":
            return S.neg(self.tr(e.operand, binders))
        if e.op == "-":
            inner = S.Op("-", (self.tr(e.operand, binders),), S.INT)
            if e.wrap:
                return self.enc.norm_term(
                    self.fb.sema.wrap_widths[id(e)], inner)
            return inner
        if e.op == "*":
            rid = self.region(e.operand, binders)
            return S.select(self.mem(rid), self.tr(e.operand, binders))
        raise VCError("bad annotation unary %s" % e.op)

    def binary(self, e, binders):
        op = e.op
        lt, rt = self.t(e.left), self.t(e.right)
        if op in ("&&", "||", "==>"):
            a, b = self.tr(e.left, binders), self.tr(e.right, binders)
            return {"&&": S.conj, "||": S.disj, "==>": S.implies}[op](a, b)
        if lt.is_ptr() or rt.is_ptr() or lt.kind == "null" \
                or rt.kind == "null":
            return self.ptr_binary(e, binders)
        a, b = self.tr(e.left, binders), self.tr(e.right, binders)
        if op == "==":
            return S.eq(a, b)
        if op == "!=":
            return S.neg(S.eq(a, b))
        if op in ("<", "<=", ">", ">="):
            return {"<": S.lt, "<=": S.le, ">": S.gt, ">=": S.ge}[op](a, b)
        if op in ("+", "-", "*"):
            out = {"+": S.add, "-": S.sub, "*": S.mul}[op](a, b)
            if e.wrap:
                out = self.enc.norm_term(self.fb.sema.wrap_widths[id(e)],
                                         out)
            return out
        if op == "/":
            return S.idiv(a, b)
        if op == "%":
            return S.imod(a, b)
        if op in ("<<", ">>"):
            if not isinstance(_strip_implicit(e.right), L.IntConst):
                raise VCError("annotation shifts take literal amounts")
            k = _strip_implicit(e.right).value
            if op == ">>":
                return S.idiv(a, S.IntLit(1 << k))
            out = S.mul(a, S.IntLit(1 << k))
            if e.wrap:
                out = self.enc.norm_term(self.fb.sema.wrap_widths[id(e)],
                                         out)
            return out
        raise VCError("bad annotation operator %s" % op)

    def ptr_binary(self, e, binders):
        op = e.op
        null_l = isinstance(_strip_at(e.left), L.NullPtr)
        null_r = isinstance(_strip_at(e.right), L.NullPtr)
        if op in ("==", "!="):
            if null_l and null_r:
                out = S.TRUE
            elif null_l or null_r:
                side = e.left if null_r else e.right
                rid = self.region(side, binders)
                out = S.eq(self.tr(side, binders), self.fb.encs[rid].null)
            else:
                out = S.eq(self.tr(e.left, binders),
                           self.tr(e.right, binders))
            return S.neg(out) if op == "!=" else out
        if op in ("<", "<=", ">", ">="):
            # order comparison is only defined within one block, so its
            # truth carries the same_block fact
            rid = self.region(e.left, binders)
            enc = self.fb.encs[rid]
            l = self.tr(e.left, binders)
            r = self.tr(e.right, binders)
            cmp = {"<": S.lt, "<=": S.le, ">": S.gt,
                   ">=": S.ge}[op](enc.sub(l, r), S.IntLit(0))
            return S.conj(enc.same_block(l, r), cmp)
        lp = self.t(e.left).is_ptr()
        if op == "-" and lp and self.t(e.right).is_ptr():
            rid = self.region(e.left, binders)
            return self.fb.encs[rid].sub(self.tr(e.left, binders),
                                         self.tr(e.right, binders))
        if op in ("+", "-"):
            pe, ie = (e.left, e.right) if lp else (e.right, e.left)
            rid = self.region(pe, binders)
            off = self.tr(ie, binders)
            if op == "-":
                off = S.Op("-", (off,), S.INT)
            return self.fb.encs[rid].shift(self.tr(pe, binders), off)
        raise VCError("bad pointer operator %s in an annotation" % op)

    def quant(self, e, binders):
        inner = dict(binders)
        consts, guards = [], []
        for btype, name in e.binders:
            if btype.ptr > 0:
                rid = self.binder_region.get((id(e), name))
                if rid is None:
                    raise VCError("unplaced pointer binder %s" % name)
                c = self.fb.fresh(name, self.fb.region_enc(rid).sort)
                inner[name] = (c, rid)
            else:
                c = self.fb.fresh(name, S.INT)
                inner[name] = (c, None)
                kind = _BINDER_KINDS.get(btype.base)
                if kind is not None:
                    guards.append(self.enc.in_bounds_term(kind, c))
            consts.append(c)
        body = self.tr(e.body, inner)
        if guards:
            g = S.conj(*guards)
            body = S.implies(g, body) if e.kind == "forall" \
                else S.conj(g, body)
        return S.forall(consts, body) if e.kind == "forall" \
            else S.exists(consts, body)

    def call(self, e, binders):
        li = self.fb.sema.logics.get(e.name)
        if li is None:
            raise VCError("code call %s inside an annotation" % e.name)
        d = li.decl
        info = self.fb.gen.reg.logic_info[e.name]
        rho = [None] * info.nclasses
        for pos, cls in info.param_class.items():
            rid = self.region(e.args[pos], binders)
            if rho[cls] is not None and rho[cls] != rid:
                raise VCError("conflicting regions applying %s" % e.name)
            rho[cls] = rid
        if any(r is None for r in rho):
            raise VCError("%s has an unconstrained region" % e.name)
        rho = tuple(rho)
        fd = self.instantiate(d, info, rho)
        if len(d.labels) > 1:
            raise VCError("multi-label logic application")
        margs = []
        if d.labels:
            snap = self.snapshot(e.label or "Here")
            for rid in rho:
                m = snap.mems.get(rid)
                if m is None:
                    raise VCError("no memory for region r%d" % rid)
                margs.append(m)
        vargs = [self.tr(a, binders) for a in e.args]
        return fd(*(margs + vargs))

    def instantiate(self, d: L.LogicDecl, info, rho: tuple) -> S.FunDecl:
        gen = self.fb.gen
        key = (d.name, rho)
        hit = gen.logic_insts.get(key)
        if hit is not None:
            fd, ax = hit
            if ax is not None:
                self.fb.vc.axiom(*ax)
            return fd
        param_sorts = []
        for _lbl in d.labels:
            for rid in rho:
                param_sorts.append(self.fb.region_enc(rid).mem_sort)
        for i, p in enumerate(d.params):
            if p.type.ptr > 0:
                rid = rho[info.param_class[i]]
                param_sorts.append(self.fb.region_enc(rid).sort)
            else:
                param_sorts.append(S.INT)
        ret = S.BOOL if d.kind == "predicate" else S.INT
        fd = S.FunDecl(d.name + "".join("$r%d" % r for r in rho),
                       tuple(param_sorts), ret)
        ax = None
        if d.body is not None:
            ax = (fd.name + "$def", self.defining_axiom(d, info, rho, fd))
            self.fb.vc.axiom(*ax)
        gen.logic_insts[key] = (fd, ax)
        return fd

    def defining_axiom(self, d, info, rho, fd) -> S.Term:
        fb = self.fb
        mvars, mems = [], {}
        for _lbl in d.labels:
            for rid in rho:
                m = fb.fresh("m", fb.region_enc(rid).mem_sort)
                mvars.append(m)
                mems[rid] = m
        snap = Snapshot({}, mems)
        labels = {lbl: snap for lbl in d.labels}
        pvars, pbind = [], {}
        for i, p in enumerate(d.params):
            if p.type.ptr > 0:
                rid = rho[info.param_class[i]]
                c = fb.fresh(p.name, fb.region_enc(rid).sort)
                pbind[p.name] = (c, rid)
            else:
                c = fb.fresh(p.name, S.INT)
                pbind[p.name] = (c, None)
            pvars.append(c)
        breg = {k: rho[cls] for k, cls in info.binder_class.items()}
        tr = _AnnotTr(fb, snap, labels, None, {}, None, self.fr, breg)
        body = tr.tr(d.body, pbind)
        args = mvars + pvars
        # the inline pass unfolds applications through this
        object.__setattr__(fd, "definition", (tuple(args), body))
        return S.forall(args, S.eq(fd(*args), body), [fd(*args)])


# ======================================================== code execution

class _CodeEval:
    """Evaluates code expressions against a PathState, emitting safety
    goals and threading side effects in evaluation order."""

    def __init__(self, fb: _FnBuilder):
        self.fb = fb
        self.enc = fb.enc

    def t(self, e) -> CType:
        return self.fb.ctype(e)

    def truthy(self, e, v: S.Term) -> S.Term:
        ct = self.t(e)
        if ct.is_ptr():
            rid = self.fb.region_of(e)
            return S.neg(S.eq(v, self.fb.encs[rid].null))
        if ct.kind == "null":
            return S.FALSE
        return S.neg(S.eq(v, S.IntLit(0)))

    def falsey(self, e, v: S.Term) -> S.Term:
        return S.neg(self.truthy(e, v))

    def bool_to_int(self, b: S.Term) -> S.Term:
        return S.ite(b, S.IntLit(1), S.IntLit(0))

    def eval(self, e, st: PathState,
             want_rid: Optional[int] = None) -> S.Term:
        if isinstance(e, L.Ident):
            return st.vars[e.name]
        if isinstance(e, L.IntConst):
            return S.IntLit(e.value)
        if isinstance(e, L.NullPtr):
            if want_rid is None:
                raise VCError("NULL needs a pointer context")
            return self.fb.encs[want_rid].null
        if isinstance(e, L.Unary):
            return self.unary(e, st)
        if isinstance(e, L.Binary):
            return self.binary(e, st)
        if isinstance(e, L.Assign):
            return self.assign(e, st)
        if isinstance(e, L.CompoundAssign):
            return self.compound(e, st)
        if isinstance(e, L.IncDec):
            return self.incdec(e, st)
        if isinstance(e, L.Cast):
            return self.cast(e, st)
        if isinstance(e, L.Call):
            return self.call(e, st)
        if isinstance(e, L.Index):
            addr, rid = self.address(e, st)
            return self.load(st, rid, addr, e)
        if isinstance(e, L.Ternary):
            ct = self.t(e)
            want = self.fb.region_of(e) if ct.is_ptr() else None
            c = self.eval(e.cond, st)
            cb = self.truthy(e.cond, c)
            v1 = self.guarded(e.then, st, cb, want)
            v2 = self.guarded(e.els, st, S.neg(cb), want)
            return S.ite(cb, v1, v2)
        raise VCError("unsupported code expression %s" % type(e).__name__)

    def guarded(self, e, st, guard, want_rid=None) -> S.Term:
        before = st.writes
        self.fb.guards.append(guard)
        try:
            v = self.eval(e, st, want_rid)
        finally:
            self.fb.guards.pop()
        if st.writes != before:
            raise VCError("side effect under a short-circuit guard")
        return v

    # loads and stores

    def address(self, e, st) -> tuple:
        """lvalue address of *p or p[i]: (pointer term, region id)."""
        if isinstance(e, L.Unary) and e.op == "*":
            rid = self.fb.region_of(e.operand)
            return self.eval(e.operand, st), rid
        if isinstance(e, L.Index):
            rid = self.fb.region_of(e.base)
            base = self.eval(e.base, st)
            idx = self.eval(e.index, st)
            return self.fb.encs[rid].shift(base, idx), rid
        raise VCError("not an addressable expression")

    def load(self, st, rid, addr, e) -> S.Term:
        enc = self.fb.encs[rid]
        self.fb.goal("safety-bounds", enc.valid_one(addr), st,
                     getattr(e, "pos", None))
        return S.select(st.mems[rid], addr)

    def store(self, st: PathState, rid: int, addr: S.Term, value: S.Term,
              pos):
        enc = self.fb.encs[rid]
        self.fb.goal("safety-bounds", enc.valid_one(addr), st, pos)
        fp = self.fb.footprint
        if fp is not None:
            inside = [enc.in_footprint(addr, b, lo, hi)
                      for (b, lo, hi) in fp.get(rid, [])]
            self.fb.goal("frame", S.disj(*inside) if inside else S.FALSE,
                         st, pos)
        m2 = self.fb.new_mem(st, rid)
        st.hyps.append(S.eq(m2, S.store(st.mems[rid], addr, value)))
        st.mems[rid] = m2
        st.writes += 1

    def set_var(self, st: PathState, name: str, value: S.Term):
        st.vars[name] = value
        st.writes += 1

    # operators

    def unary(self, e, st) -> S.Term:
        if e.op == "*":
            addr, rid = self.address(e, st)
            return self.load(st, rid, addr, e)
        if e.op == "!":
            v = self.eval(e.operand, st)
            return self.bool_to_int(self.falsey(e.operand, v))
        kind = self.t(e).kind
        a = self.eval(e.operand, st)
        for _gk, gterm in self.enc.unary_safety(e.op, kind, e.wrap, a):
            self.fb.goal("safety-overflow", gterm, st, e.pos)
        post = self.enc.unary_post(e.op, kind, e.wrap, a)
        z = self.fb.bind_int(st, "t", kind, post)
        if self.enc.dual:
            ab = self.fb.bv_image(st, a, kind)
            self.fb.link_bv(st, z, kind,
                            S.bvop("bvneg" if e.op == "-" else "bvnot", ab))
        return z

    def binary(self, e, st) -> S.Term:
        op = e.op
        lt, rt = self.t(e.left), self.t(e.right)
        if op in ("&&", "||"):
            v1 = self.eval(e.left, st)
            b1 = self.truthy(e.left, v1)
            guard = b1 if op == "&&" else S.neg(b1)
            v2 = self.guarded(e.right, st, guard)
            b2 = self.truthy(e.right, v2)
            out = S.conj(b1, b2) if op == "&&" else S.disj(b1, b2)
            return self.bool_to_int(out)
        if lt.is_ptr() or rt.is_ptr() or lt.kind == "null" \
                or rt.kind == "null":
            return self.ptr_binary(e, st)
        if op in ("==", "!=", "<", "<=", ">", ">="):
            a = self.eval(e.left, st)
            b = self.eval(e.right, st)
            cmp = {"==": S.eq, "!=": lambda x, y: S.neg(S.eq(x, y)),
                   "<": S.lt, "<=": S.le, ">": S.gt, ">=": S.ge}[op](a, b)
            return self.bool_to_int(cmp)
        kind = self.t(e).kind
        a = self.eval(e.left, st)
        b = self.eval(e.right, st)
        shamt = _shamt(e.right) if op in ("<<", ">>") else None
        return self.op_result(op, kind, e.wrap, a, b, st, e.pos, shamt,
                              bkind=rt.kind if op in ("<<", ">>") else None)

    def op_result(self, op, kind, wrap, a, b, st, pos, shamt,
                  bkind=None) -> S.Term:
        for gk, gterm in self.enc.safety(op, kind, wrap, a, b, shamt):
            self.fb.goal("safety-div" if gk == "div" else "safety-overflow",
                         gterm, st, pos)
        post = self.enc.int_post(op, kind, wrap, a, b, shamt)
        z = self.fb.bind_int(st, "t", kind, post)
        if self.enc.dual:
            ab = self.fb.bv_image(st, a, kind)
            if bkind is not None and bkind != kind:
                bb = self.enc.resize_bv(self.fb.bv_image(st, b, bkind),
                                        bkind, kind)
            else:
                bb = self.fb.bv_image(st, b, kind)
            self.fb.link_bv(st, z, kind, self.enc.bv_term(op, kind, ab, bb))
        return z

    def ptr_binary(self, e, st) -> S.Term:
        op = e.op
        lt, rt = self.t(e.left), self.t(e.right)
        if op in ("==", "!="):
            null_l = isinstance(e.left, L.NullPtr)
            null_r = isinstance(e.right, L.NullPtr)
            if null_l and null_r:
                return S.IntLit(1 if op == "==" else 0)
            if null_l or null_r:
                side = e.left if null_r else e.right
                rid = self.fb.region_of(side)
                v = self.eval(side, st)
                out = S.eq(v, self.fb.encs[rid].null)
            else:
                a = self.eval(e.left, st)
                b = self.eval(e.right, st)
                out = S.eq(a, b)
            return self.bool_to_int(S.neg(out) if op == "!=" else out)
        if op in ("<", "<=", ">", ">="):
            rid = self.fb.region_of(e.left if lt.is_ptr() else e.right)
            enc = self.fb.encs[rid]
            a = self.eval(e.left, st)
            b = self.eval(e.right, st)
            self.fb.goal("safety-same-block", enc.same_block(a, b), st,
                         e.pos)
            # execution past this point means the comparison was defined
            self.fb.assume(st, enc.same_block(a, b))
            cmp = {"<": S.lt, "<=": S.le, ">": S.gt,
                   ">=": S.ge}[op](enc.sub(a, b), S.IntLit(0))
            return self.bool_to_int(cmp)
        if op == "-" and lt.is_ptr() and rt.is_ptr():
            rid = self.fb.region_of(e.left)
            enc = self.fb.encs[rid]
            a = self.eval(e.left, st)
            b = self.eval(e.right, st)
            self.fb.goal("safety-same-block", enc.same_block(a, b), st,
                         e.pos)
            self.fb.assume(st, enc.same_block(a, b))
            d = enc.sub(a, b)
            self.fb.goal("safety-overflow",
                         self.enc.in_bounds_term("i64", d), st, e.pos)
            return self.fb.bind_int(st, "d", "i64", d)
        # pointer +- integer, operands evaluated left to right
        if lt.is_ptr():
            p = self.eval(e.left, st)
            off = self.eval(e.right, st)
        else:
            off = self.eval(e.left, st)
            p = self.eval(e.right, st)
        rid = self.fb.region_of(e.left if lt.is_ptr() else e.right)
        if op == "-":
            off = S.Op("-", (off,), S.INT)
        return self.fb.encs[rid].shift(p, off)

    def assign(self, e, st) -> S.Term:
        if isinstance(e.target, L.Ident):
            ct = self.t(e.target)
            want = self.fb.region_of(e.target) if ct.is_ptr() else None
            v = self.eval(e.value, st, want)
            self.set_var(st, e.target.name, v)
            return v
        addr, rid = self.address(e.target, st)
        ek = self.fb.fr.elem_kind.get(rid)
        want = self.fb.fr.elem.get(rid) if ek == "ptr" else None
        v = self.eval(e.value, st, want)
        self.store(st, rid, addr, v, e.pos)
        return v

    def compound(self, e, st) -> S.Term:
        tt = self.t(e.target)
        if isinstance(e.target, L.Ident):
            cur = st.vars[e.target.name]
            newv = self.compound_value(e, tt, cur, st)
            self.set_var(st, e.target.name, newv)
            return newv
        addr, rid = self.address(e.target, st)
        cur = self.load(st, rid, addr, e.target)
        newv = self.compound_value(e, tt, cur, st)
        self.store(st, rid, addr, newv, e.pos)
        return newv

    def compound_value(self, e, tt: CType, cur: S.Term, st) -> S.Term:
        if tt.is_ptr():
            off = self.eval(e.value, st)
            if e.op == "-":
                off = S.Op("-", (off,), S.INT)
            rid = self.fb.region_of(e.target)
            return self.fb.encs[rid].shift(cur, off)
        vt = self.t(e.value)
        u = vt.kind            # sema coerced the value to the usual kind
        if not _widening(tt.kind, u):
            raise VCError("lossy compound assignment target")
        v = self.eval(e.value, st)
        shamt = _shamt(e.value) if e.op in ("<<", ">>") else None
        z = self.op_result(e.op, u, e.wrap, cur, v, st, e.pos, shamt)
        return self.narrow(z, u, tt.kind, e.wrap, st, e.pos)

    def incdec(self, e, st) -> S.Term:
        tt = self.t(e.target)
        if not isinstance(e.target, L.Ident):
            raise VCError("++/-- target must be a variable")
        cur = st.vars[e.target.name]
        if tt.is_ptr():
            rid = self.fb.region_of(e.target)
            newv = self.fb.encs[rid].shift(
                cur, S.IntLit(1 if e.op == "++" else -1))
        else:
            u = _promote_kind(tt.kind)
            op = "+" if e.op == "++" else "-"
            z = self.op_result(op, u, e.wrap, cur, S.IntLit(1), st, e.pos,
                               None)
            newv = self.narrow(z, u, tt.kind, e.wrap, st, e.pos)
        self.set_var(st, e.target.name, newv)
        return newv if e.prefix else cur

    def narrow(self, v, src, dst, wrap, st, pos) -> S.Term:
        if src == dst:
            return v
        for _gk, gterm in self.enc.cast_safety(src, dst, wrap, v):
            self.fb.goal("safety-overflow", gterm, st, pos)
        post = self.enc.cast_post(dst, wrap, v)
        out = v if post is v else self.fb.bind_int(st, "t", dst, post)
        if self.enc.dual:
            ab = self.fb.bv_image(st, v, src)
            self.fb.link_bv(st, out, dst, self.enc.resize_bv(ab, src, dst))
        return out

    def cast(self, e, st) -> S.Term:
        ct = self.t(e)
        if ct.is_ptr():
            return self.eval(e.operand, st, self.fb.region_of(e))
        src = self.t(e.operand).kind
        dst = ct.kind
        if isinstance(e.operand, L.IntConst):
            lo, hi = kind_range(dst)
            if lo <= e.operand.value <= hi:
                return S.IntLit(e.operand.value)
        v = self.eval(e.operand, st)
        return self.narrow(v, src, dst, e.wrap, st, e.pos)

    # calls

    def call(self, e, st) -> S.Term:
        fb = self.fb
        callee = fb.sema.funcs[e.name]
        cfr = fb.gen.reg.functions.get(e.name)
        if cfr is None:
            raise VCError("no region information for %s" % e.name)
        env, region_env, rid_map = {}, {}, {}
        for p, pct, a in zip(callee.decl.params, callee.params, e.args):
            if pct.is_ptr():
                rid = fb.region_of(a)
                v = self.eval(a, st, rid)
                region_env[p.name] = rid
                rid_map[cfr.var_region[p.name]] = rid
            else:
                v = self.eval(a, st)
            env[p.name] = v
        binder_region = {k: rid_map[r]
                         for k, r in cfr.binder_region.items()
                         if r in rid_map}
        pre = st.snap()
        labels = {"Pre": pre, "Old": pre}
        kw = dict(env=env, region_env=region_env, fr=cfr,
                  binder_region=binder_region)
        c = callee.decl.contract
        for r in c.requires:
            fb.goal("call-pre", fb.annot(r, pre, labels=labels, **kw),
                    st, e.pos)
        if c.assigns is None:
            raise VCError("%s has no assigns clause" % e.name)
        touched: dict = {}
        for item in c.assigns:
            rid, base, lo, hi = _item_entry(fb, item, pre, labels, kw)
            touched.setdefault(rid, []).append((base, lo, hi))
        for rid, entries in sorted(touched.items()):
            fb.havoc_mem(st, rid, entries)
        post = st.snap()
        if callee.ret.is_ptr():
            crid = cfr.var_region.get(RESULT)
            if crid not in rid_map:
                raise VCError(
                    "cannot place the region of %s's result" % e.name)
            region_env[RESULT] = rid_map[crid]
            res = fb.fresh("ret", fb.encs[rid_map[crid]].sort)
        else:
            res = fb.bind_int(st, "ret", callee.ret.kind, None)
        for r in c.ensures:
            fb.assume(st, fb.annot(r, post, labels=labels, result=res,
                                   **kw))
        for b in c.behaviors:
            cond = S.conj(*[fb.annot(x, pre, labels=labels, **kw)
                            for x in b.assumes]) if b.assumes else S.TRUE
            for r in b.ensures:
                fb.assume(st, S.implies(
                    cond,
                    fb.annot(r, post, labels=labels, result=res, **kw)))
        return res


def _item_entry(fb: _FnBuilder, item: L.AssignsItem, snap, labels, kw):
    """(region, base, lo, hi) of one assigns item, terms over `snap`."""
    region_env = kw.get("region_env")
    fr = kw.get("fr")
    if item.lo is not None:
        rid = fb.region_of(item.base, None, region_env, fr)
        return (rid,
                fb.annot(item.base, snap, labels=labels, **kw),
                fb.annot(item.lo, snap, labels=labels, **kw),
                fb.annot(item.hi, snap, labels=labels, **kw))
    b = item.base
    if isinstance(b, L.Unary) and b.op == "*":
        rid = fb.region_of(b.operand, None, region_env, fr)
        return (rid, fb.annot(b.operand, snap, labels=labels, **kw),
                S.IntLit(0), S.IntLit(0))
    if isinstance(b, L.Index):
        rid = fb.region_of(b.base, None, region_env, fr)
        idx = fb.annot(b.index, snap, labels=labels, **kw)
        return (rid, fb.annot(b.base, snap, labels=labels, **kw), idx, idx)
    raise VCError("unsupported assigns item")


# ==================================================== statement execution

class _Exec:
    def __init__(self, fb: _FnBuilder):
        self.fb = fb
        self.ev = _CodeEval(fb)

    def run(self) -> FnVC:
        fb = self.fb
        fn = fb.fn
        st = PathState({}, {}, [], {}, {})
        for p, ct in zip(fn.params, fb.info.params):
            if ct.is_ptr():
                rid = fb.fr.var_region[p.name]
                st.vars[p.name] = fb.fresh(p.name, fb.encs[rid].sort)
            else:
                c = fb.fresh(p.name, S.INT)
                st.vars[p.name] = c
                st.hyps.append(fb.enc.in_bounds_term(ct.kind, c))
                if fb.enc.dual:
                    fb.bv_image(st, c, ct.kind)
        for rid in range(len(fb.fr.classes)):
            st.mems[rid] = fb.new_mem(st, rid)
        pre = st.snap()
        fb.pre = pre
        st.labels = {"Pre": pre, "Old": pre}
        labels = st.labels
        c = fn.contract
        for r in c.requires:
            st.hyps.append(fb.annot(r, st, labels=labels))
        if c.behaviors:
            assumed = [S.conj(*[fb.annot(a, st, labels=labels)
                                for a in b.assumes]) if b.assumes else S.TRUE
                       for b in c.behaviors]
            if c.complete:
                fb.goal("completeness", S.disj(*assumed), st, fn.pos)
            if c.disjoint and len(assumed) > 1:
                fb.goal("disjointness",
                        S.conj(*[S.neg(S.conj(x, y)) for x, y in
                                 itertools.combinations(assumed, 2)]),
                        st, fn.pos)
        if c.assigns is not None:
            fb.footprint = {}
            for item in c.assigns:
                rid, base, lo, hi = _item_entry(
                    fb, item, st.snap(), labels,
                    dict(env=None, region_env=None, fr=None,
                         binder_region=None))
                fb.footprint.setdefault(rid, []).append((base, lo, hi))
        for tag, _stt in self.stmts(fn.body, st):
            raise VCError("%s escapes the body of %s" %
                          ("control" if tag == "fall" else tag, fn.name))
        fb.instantiate_unit_axioms()
        for name, term in fb.enc.axioms():
            fb.vc.axiom(name, term)
        return fb.vc

    # ---------------------------------------------------------- statements

    def stmts(self, body, st) -> list:
        states = [("fall", st)]
        for s in body:
            nxt = []
            for tag, stt in states:
                if tag != "fall":
                    nxt.append((tag, stt))
                else:
                    nxt.extend(self.stmt(s, stt))
            states = nxt
        return states

    def stmt(self, s, st) -> list:
        fb = self.fb
        if isinstance(s, L.DeclStmt):
            ct = fb.info.locals[s.name].type
            if s.init is not None:
                want = fb.fr.var_region.get(s.name) if ct.is_ptr() else None
                v = self.ev.eval(s.init, st, want)
            elif ct.is_ptr():
                v = fb.fresh(s.name, fb.encs[fb.fr.var_region[s.name]].sort)
            else:
                v = fb.bind_int(st, s.name, ct.kind, None)
            self.ev.set_var(st, s.name, v)
            return [("fall", st)]
        if isinstance(s, L.ExprStmt):
            self.ev.eval(s.expr, st)
            return [("fall", st)]
        if isinstance(s, L.AssertStmt):
            f = fb.annot(s.formula, st, labels=dict(st.labels))
            fb.goal("assert", f, st, s.pos)
            st.hyps.append(f)
            return [("fall", st)]
        if isinstance(s, L.UnifyPragma):
            return [("fall", st)]
        if isinstance(s, L.Block):
            return self.stmts(s.stmts, st)
        if isinstance(s, L.If):
            c = self.ev.eval(s.cond, st)
            cb = self.ev.truthy(s.cond, c)
            st_t, st_f = st.fork(), st.fork()
            st_t.hyps.append(cb)
            st_f.hyps.append(S.neg(cb))
            out = self.stmts(s.then, st_t)
            out.extend(self.stmts(s.els, st_f))
            return out
        if isinstance(s, L.Return):
            self.handle_return(s, st)
            return []
        if isinstance(s, L.Break):
            return [("break", st)]
        if isinstance(s, L.Continue):
            return [("continue", st)]
        if isinstance(s, L.While):
            return self.loop(st, s.spec, s.cond, s.body, "while", pos=s.pos)
        if isinstance(s, L.DoWhile):
            return self.loop(st, s.spec, s.cond, s.body, "do", pos=s.pos)
        if isinstance(s, L.For):
            for item in (s.init or ()):
                if isinstance(item, L.DeclStmt):
                    [(_, st)] = self.stmt(item, st)
                else:
                    self.ev.eval(item, st)
            return self.loop(st, s.spec, s.cond, s.body, "while",
                             step=s.step, pos=s.pos)
        raise VCError("unsupported statement %s" % type(s).__name__)

    # ------------------------------------------------------------- returns

    def handle_return(self, s: L.Return, st: PathState):
        fb = self.fb
        if s.value is None:
            raise VCError("return without a value")
        ret = fb.info.ret
        want = fb.fr.var_region.get(RESULT) if ret.is_ptr() else None
        v = self.ev.eval(s.value, st, want)
        # formals in an ensures denote their values at entry; only the
        # heap is read in the post state
        here = Snapshot(dict(fb.pre.vars), dict(st.mems))
        labels = dict(st.labels)
        labels["Here"] = here
        c = fb.fn.contract
        for r in c.ensures:
            fb.goal("behavior-ensures(default)",
                    fb.annot(r, here, labels=labels, result=v), st, s.pos)
        for b in c.behaviors:
            st_b = st.fork()
            st_b.hyps.extend(fb.annot(a, fb.pre, labels=labels)
                             for a in b.assumes)
            for r in b.ensures:
                fb.goal("behavior-ensures(%s)" % b.name,
                        fb.annot(r, here, labels=labels, result=v), st_b,
                        s.pos)
        if fb.footprint is None:
            return
        # frame: outside the footprint, memory equals the entry state
        for rid in sorted(fb.vc.regions):
            if st.mems[rid] is fb.pre.mems[rid]:
                continue
            enc = fb.encs[rid]
            p = fb.fresh("p", enc.sort)
            outside = S.conj(*[S.neg(enc.in_footprint(p, b_, lo, hi))
                               for (b_, lo, hi) in fb.footprint.get(rid, [])])
            fb.goal("frame",
                    S.forall([p], S.implies(
                        outside, S.eq(S.select(st.mems[rid], p),
                                      S.select(fb.pre.mems[rid], p)))),
                    st, s.pos)

    # --------------------------------------------------------------- loops

    def loop(self, st, spec, cond, body, style, step=None, pos=None):
        fb = self.fb
        spec = spec or L.LoopSpec()
        for inv in spec.invariants:
            fb.goal("inv-init", fb.annot(inv, st, labels=dict(st.labels)),
                    st, pos)
        entry = st.snap()
        hav = st.fork()
        targets, regions_written = _effects(fb, body, cond, step)
        for name in sorted(targets):
            ct = fb.info.locals[name].type
            if ct.is_ptr():
                hav.vars[name] = fb.fresh(
                    name, fb.encs[fb.fr.var_region[name]].sort)
            else:
                hav.vars[name] = fb.bind_int(hav, name, ct.kind, None)
        for rid in sorted(regions_written):
            entries = None if fb.footprint is None \
                else fb.footprint.get(rid, [])
            fb.havoc_mem(hav, rid, entries)
        hav.labels = dict(st.labels)
        hav.labels["LoopEntry"] = entry
        for inv in spec.invariants:
            hav.hyps.append(fb.annot(inv, hav, labels=dict(hav.labels)))
        v0 = fb.annot(spec.variant, hav, labels=dict(hav.labels)) \
            if spec.variant is not None else None

        out = []
        if style == "while":
            if cond is not None:
                c = self.ev.eval(cond, hav)
                cb = self.ev.truthy(cond, c)
                ex = hav.fork()
                ex.hyps.append(S.neg(cb))
                out.append(("fall", ex))
                body_st = hav.fork()
                body_st.hyps.append(cb)
            else:
                body_st = hav.fork()
            for tag, stt in self.stmts(body, body_st):
                if tag == "break":
                    out.append(("fall", stt))
                    continue
                if step:
                    for x in step:
                        self.ev.eval(x, stt)
                self.back_edge(spec, v0, stt, pos)
        else:
            for tag, stt in self.stmts(body, hav.fork()):
                if tag == "break":
                    out.append(("fall", stt))
                    continue
                c = self.ev.eval(cond, stt)
                cb = self.ev.truthy(cond, c)
                again = stt.fork()
                again.hyps.append(cb)
                self.back_edge(spec, v0, again, pos)
                done = stt.fork()
                done.hyps.append(S.neg(cb))
                out.append(("fall", done))
        return out

    def back_edge(self, spec, v0, stt, pos):
        fb = self.fb
        for inv in spec.invariants:
            fb.goal("inv-preserve",
                    fb.annot(inv, stt, labels=dict(stt.labels)), stt, pos)
        if spec.variant is not None:
            v1 = fb.annot(spec.variant, stt, labels=dict(stt.labels))
            fb.goal("variant-decrease", S.lt(v1, v0), stt, pos)
            if not self.unsigned_variant(spec.variant):
                fb.goal("variant-nonneg", S.ge(v0, S.IntLit(0)), stt, pos)

    def unsigned_variant(self, e) -> bool:
        e = _strip_at(e)
        if isinstance(e, L.Ident):
            vi = self.fb.info.locals.get(e.name)
            return vi is not None and vi.type.is_machine() \
                and vi.type.kind not in SIGNED_KINDS
        return False


def _effects(fb: _FnBuilder, body, cond, step):
    """Names assigned and regions stored to anywhere in a loop."""
    targets: set = set()
    regions: set = set()

    def expr(e):
        if not isinstance(e, L.Expr):
            return
        if isinstance(e, (L.Assign, L.CompoundAssign, L.IncDec)):
            t = e.target
            if isinstance(t, L.Ident):
                targets.add(t.name)
            else:
                base = t.operand if isinstance(t, L.Unary) else t.base
                try:
                    regions.add(fb.region_of(base))
                except VCError:
                    pass
        if isinstance(e, L.Call) and e.name in fb.sema.funcs:
            callee = fb.sema.funcs[e.name]
            for pct, a in zip(callee.params, e.args):
                if pct.is_ptr():
                    try:
                        regions.add(fb.region_of(a))
                    except VCError:
                        pass
        for f in getattr(e, "__dataclass_fields__", {}):
            v = getattr(e, f)
            if isinstance(v, L.Expr):
                expr(v)
            elif isinstance(v, tuple):
                for x in v:
                    if isinstance(x, L.Expr):
                        expr(x)

    def stmt(s):
        if isinstance(s, L.DeclStmt):
            targets.add(s.name)
            expr(s.init)
        elif isinstance(s, L.ExprStmt):
            expr(s.expr)
        elif isinstance(s, L.Block):
            for x in s.stmts:
                stmt(x)
        elif isinstance(s, L.If):
            expr(s.cond)
            for x in s.then:
                stmt(x)
            for x in s.els:
                stmt(x)
        elif isinstance(s, (L.While, L.DoWhile)):
            expr(s.cond)
            for x in s.body:
                stmt(x)
        elif isinstance(s, L.For):
            for item in (s.init or ()):
                if isinstance(item, L.DeclStmt):
                    stmt(item)
                else:
                    expr(item)
            expr(s.cond)
            for x in (s.step or ()):
                expr(x)
            for x in s.body:
                stmt(x)
        elif isinstance(s, L.Return):
            expr(s.value)

    for s in body:
        stmt(s)
    expr(cond)
    for x in (step or ()):
        expr(x)
    return targets, regions
