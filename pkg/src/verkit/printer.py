"""Canonical source printer.

parse_unit(pretty_print(u)) == u holds for every unit the parser produces
from real sources; the printer picks one spelling where the grammar allows
several (u8 for unsigned char, `+%` for wrapping addition in annotations,
`\\old` for `\\at(.., Old)`), and the parser normalizes to the same choice.
Statement tuples of length > 1 outside a Block (multi-declarator bodies of
a braceless if) are not reproduced exactly; nothing the toolchain emits
produces them."""

from __future__ import annotations

from . import lang as L

# precedence levels, mirroring the parser's grammar
_LEVEL = {
    "=": 1, "?:": 2, "==>": 3, "||": 4, "&&": 5, "|": 6, "^": 7, "&": 8,
    "==": 9, "!=": 9, "<": 10, ">": 10, "<=": 10, ">=": 10,
    "<<": 11, ">>": 11, "+": 12, "-": 12, "*": 13, "/": 13, "%": 13,
}
_UNARY = 14
_POSTFIX = 15
_PRIMARY = 16

_CHAR_ESCAPES = {0: "\\0", 10: "\\n", 9: "\\t", 13: "\\r",
                 92: "\\\\", 39: "\\'", 34: '\\"'}


def type_str(t: L.TypeExpr) -> str:
    out = ""
    if t.const and t.const[0]:
        out += "const "
    out += t.base
    for lvl in range(t.ptr):
        out += " *" if lvl == 0 else "*"
        if len(t.const) > lvl + 1 and t.const[lvl + 1]:
            out += " const"
    return out


def _level(e: L.Expr) -> int:
    if isinstance(e, (L.Assign, L.CompoundAssign)):
        return _LEVEL["="]
    if isinstance(e, L.Ternary):
        return _LEVEL["?:"]
    if isinstance(e, L.QuantExpr):
        return 0
    if isinstance(e, L.Binary):
        return _LEVEL[e.op]
    if isinstance(e, (L.Unary, L.Cast)):
        return _UNARY
    if isinstance(e, L.IncDec):
        return _UNARY if e.prefix else _POSTFIX
    if isinstance(e, (L.Index, L.Call)):
        return _POSTFIX
    return _PRIMARY


class ExprPrinter:
    def __init__(self, annot: bool):
        self.annot = annot

    def paren(self, e: L.Expr, minlevel: int) -> str:
        s = self.expr(e)
        if _level(e) < minlevel:
            return "(" + s + ")"
        return s

    def expr(self, e: L.Expr) -> str:
        m = getattr(self, "_" + type(e).__name__, None)
        if m is None:
            raise TypeError("cannot print %r" % type(e).__name__)
        return m(e)

    # ---------------------------------------------------------- leaves

    def _Ident(self, e):
        return e.name

    def _IntConst(self, e):
        if e.char:
            esc = _CHAR_ESCAPES.get(e.value)
            if esc is None:
                esc = chr(e.value) if 32 <= e.value < 127 else "\\x%02x" % e.value
            return "'%s'" % esc
        body = "0x%x" % e.value if e.hex else str(e.value)
        return body + e.suffix

    def _NullPtr(self, e):
        return "\\null" if self.annot else "NULL"

    def _BoolConst(self, e):
        return "\\true" if e.value else "\\false"

    def _Result(self, e):
        return "\\result"

    # ---------------------------------------------------------- operators

    def _Unary(self, e):
        inner = self.paren(e.operand, _UNARY)
        # -(-x) and -(--x) must not fuse into a predecrement
        if e.op == "-" and inner.startswith("-"):
            inner = "(" + inner + ")"
        mark = "/*@%*/" if e.wrap else ""
        return e.op + mark + inner

    def _Binary(self, e):
        lvl = _LEVEL[e.op]
        if e.op == "==>":
            # right associative
            left = self.paren(e.left, lvl + 1)
            right = self.paren(e.right, lvl)
        else:
            left = self.paren(e.left, lvl)
            right = self.paren(e.right, lvl + 1)
        op = e.op
        if e.wrap:
            # the fused spellings exist only in annotations
            op += "%" if self.annot and op in ("+", "-", "*") else "/*@%*/"
        return "%s %s %s" % (left, op, right)

    def _Ternary(self, e):
        return "%s ? %s : %s" % (self.paren(e.cond, _LEVEL["?:"] + 1),
                                 self.expr(e.then),
                                 self.paren(e.els, _LEVEL["?:"]))

    def _Assign(self, e):
        return "%s = %s" % (self.paren(e.target, _UNARY),
                            self.paren(e.value, _LEVEL["="]))

    def _CompoundAssign(self, e):
        op = e.op + "="
        if e.wrap:
            op += "/*@%*/"
        return "%s %s %s" % (self.paren(e.target, _UNARY), op,
                             self.paren(e.value, _LEVEL["="]))

    def _IncDec(self, e):
        mark = "/*@%*/" if e.wrap else ""
        if e.prefix:
            return e.op + mark + self.paren(e.target, _UNARY)
        return self.paren(e.target, _POSTFIX) + e.op + mark

    def _Cast(self, e):
        inner = self.paren(e.operand, _UNARY)
        if e.implicit:
            if not e.wrap:
                return inner
            return "/*@(%s %%)*/%s" % (type_str(e.type), inner)
        if e.wrap and self.annot:
            return "(%s %%)%s" % (type_str(e.type), inner)
        if e.wrap:
            return "(%s)/*@%%*/%s" % (type_str(e.type), inner)
        return "(%s)%s" % (type_str(e.type), inner)

    def _Call(self, e):
        label = "{%s}" % e.label if e.label else ""
        return "%s%s(%s)" % (e.name, label,
                             ", ".join(self.expr(a) for a in e.args))

    def _Index(self, e):
        return "%s[%s]" % (self.paren(e.base, _POSTFIX), self.expr(e.index))

    # ---------------------------------------------------------- logic

    def _QuantExpr(self, e):
        binders = ", ".join(_param_prefix(t) + n for t, n in e.binders)
        return "\\%s %s; %s" % (e.kind, binders, self.expr(e.body))

    def _At(self, e):
        if e.label == "Old":
            return "\\old(%s)" % self.expr(e.operand)
        return "\\at(%s, %s)" % (self.expr(e.operand), e.label)

    def _Valid(self, e):
        if e.lo is None:
            return "\\valid(%s)" % self.expr(e.base)
        return "\\valid(%s + (%s..%s))" % (self.paren(e.base, _LEVEL["+"]),
                                           self.expr(e.lo), self.expr(e.hi))

    def _RangeExpr(self, e):
        return "%s..%s" % (self.expr(e.lo), self.expr(e.hi))


def expr_str(e: L.Expr, annot=True) -> str:
    return ExprPrinter(annot).expr(e)


# ---------------------------------------------------------------- statements

class UnitPrinter:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 0
        self.code = ExprPrinter(annot=False)
        self.annot = ExprPrinter(annot=True)

    def emit(self, text=""):
        self.lines.append("\t" * self.depth + text if text else "")

    def render(self, unit: L.AnnotatedUnit) -> str:
        prev = None
        for d in unit.declarations:
            if prev is not None:
                self.emit()
            if isinstance(d, L.FunctionDef):
                self.function(d)
            elif isinstance(d, L.LogicDecl):
                self.logic_decl(d)
            elif isinstance(d, L.Pragma):
                self.emit("//@ pragma %s(%s);" % (d.name, ", ".join(d.args)))
            else:
                raise TypeError(type(d).__name__)
            prev = d
        return "\n".join(self.lines) + "\n"

    def logic_decl(self, d: L.LogicDecl):
        lbl = "{%s}" % ", ".join(d.labels) if d.labels else ""
        if d.kind in ("axiom", "lemma"):
            self.emit("/*@ %s %s%s: %s; */"
                      % (d.kind, d.name, lbl, self.annot.expr(d.body)))
            return
        params = ", ".join("%s %s" % (type_str(p.type), p.name)
                           for p in d.params)
        head = d.kind
        if d.kind == "logic":
            head += " " + type_str(d.ret)
        sig = "%s %s%s(%s)" % (head, d.name, lbl, params)
        if d.body is None:
            self.emit("/*@ %s; */" % sig)
        else:
            body = self.annot.expr(d.body)
            if len(sig) + len(body) < 68:
                self.emit("/*@ %s = %s; */" % (sig, body))
            else:
                self.emit("/*@ %s =" % sig)
                self.emit("      %s; */" % body)

    def contract(self, c: L.Contract):
        rows: list[str] = []
        for r in c.requires:
            rows.append("requires %s;" % self.annot.expr(r))
        if c.assigns is not None:
            if not c.assigns:
                rows.append("assigns \\nothing;")
            else:
                rows.append("assigns %s;" % ", ".join(
                    self.assigns_item(a) for a in c.assigns))
        for r in c.ensures:
            rows.append("ensures %s;" % self.annot.expr(r))
        for b in c.behaviors:
            rows.append("behavior %s:" % b.name)
            for a in b.assumes:
                rows.append("  assumes %s;" % self.annot.expr(a))
            for a in b.ensures:
                rows.append("  ensures %s;" % self.annot.expr(a))
        if c.complete:
            rows.append("complete behaviors;")
        if c.disjoint:
            rows.append("disjoint behaviors;")
        if not rows:
            return
        if len(rows) == 1:
            self.emit("/*@ %s */" % rows[0])
            return
        self.emit("/*@ " + rows[0])
        for row in rows[1:]:
            self.emit("  @ " + row)
        self.emit("  @*/")

    def assigns_item(self, a: L.AssignsItem) -> str:
        if a.lo is not None:
            return "%s[%s..%s]" % (self.annot.paren(a.base, _POSTFIX),
                                   self.annot.expr(a.lo),
                                   self.annot.expr(a.hi))
        return self.annot.expr(a.base)

    def function(self, f: L.FunctionDef):
        self.contract(f.contract)
        params = ", ".join("%s%s" % (_param_prefix(p.type), p.name)
                           for p in f.params)
        sig = "%s%s(%s)" % (_param_prefix(f.return_type), f.name, params)
        if f.body is None:
            self.emit(sig + ";")
            return
        self.emit(sig)
        self.emit("{")
        self.depth += 1
        for s in f.body:
            self.stmt(s)
        self.depth -= 1
        self.emit("}")

    # ------------------------------------------------------------ statements

    def stmt(self, s: L.Stmt):
        if isinstance(s, L.DeclStmt):
            text = "%s%s" % (_param_prefix(s.type), s.name)
            if s.init is not None:
                printer = self.annot if s.ghost else self.code
                text += " = " + printer.expr(s.init)
            text += ";"
            if s.ghost:
                self.emit("/*@ ghost %s */" % text)
            else:
                self.emit(text)
        elif isinstance(s, L.ExprStmt):
            if s.ghost:
                self.emit("/*@ ghost %s; */" % self.annot.expr(s.expr))
            else:
                self.emit(self.code.expr(s.expr) + ";")
        elif isinstance(s, L.AssertStmt):
            self.emit("/*@ assert %s; */" % self.annot.expr(s.formula))
        elif isinstance(s, L.UnifyPragma):
            self.emit("//@ unify(%s, %s);" % (s.left, s.right))
        elif isinstance(s, L.Block):
            self.emit("{")
            self.depth += 1
            for inner in s.stmts:
                self.stmt(inner)
            self.depth -= 1
            self.emit("}")
        elif isinstance(s, L.If):
            self.emit("if (%s)" % self.code.expr(s.cond))
            self.body(s.then)
            if s.els:
                self.emit("else")
                self.body(s.els)
        elif isinstance(s, L.While):
            self.loop_spec(s.spec)
            self.emit("while (%s)" % self.code.expr(s.cond))
            self.body(s.body)
        elif isinstance(s, L.DoWhile):
            self.loop_spec(s.spec)
            self.emit("do")
            self.body(s.body)
            self.emit("while (%s);" % self.code.expr(s.cond))
        elif isinstance(s, L.For):
            self.loop_spec(s.spec)
            init = self.for_init(s.init)
            cond = self.code.expr(s.cond) if s.cond is not None else ""
            step = ", ".join(self.code.expr(e) for e in s.step) \
                if s.step else ""
            self.emit("for (%s; %s; %s)" % (init, cond, step))
            self.body(s.body)
        elif isinstance(s, L.Return):
            if s.value is None:
                self.emit("return;")
            else:
                self.emit("return %s;" % self.code.expr(s.value))
        elif isinstance(s, L.Break):
            self.emit("break;")
        elif isinstance(s, L.Continue):
            self.emit("continue;")
        else:
            raise TypeError(type(s).__name__)

    def for_init(self, init) -> str:
        if not init:
            return ""
        if isinstance(init[0], L.DeclStmt):
            first = init[0]
            parts = ["%s%s" % (_param_prefix(first.type), first.name)]
            if first.init is not None:
                parts[0] += " = " + self.code.expr(first.init)
            for d in init[1:]:
                extra = "*" * d.type.ptr
                text = extra + d.name
                if d.init is not None:
                    text += " = " + self.code.expr(d.init)
                parts.append(text)
            return ", ".join(parts)
        return ", ".join(self.code.expr(e) for e in init)

    def body(self, stmts: tuple):
        if len(stmts) == 1:
            if isinstance(stmts[0], L.Block):
                self.stmt(stmts[0])
            else:
                self.depth += 1
                self.stmt(stmts[0])
                self.depth -= 1
        elif len(stmts) == 0:
            self.depth += 1
            self.emit(";")
            self.depth -= 1
        else:
            # cannot happen for parsed sources; keep the braces honest
            self.emit("{")
            self.depth += 1
            for s in stmts:
                self.stmt(s)
            self.depth -= 1
            self.emit("}")

    def loop_spec(self, spec):
        if spec is None:
            return
        rows = ["loop invariant %s;" % self.annot.expr(i)
                for i in spec.invariants]
        if spec.variant is not None:
            rows.append("loop variant %s;" % self.annot.expr(spec.variant))
        if len(rows) == 1:
            self.emit("/*@ %s */" % rows[0])
            return
        self.emit("/*@ " + rows[0])
        for row in rows[1:]:
            self.emit("  @ " + row)
        self.emit("  @*/")


def _param_prefix(t: L.TypeExpr) -> str:
    s = type_str(t)
    return s if s.endswith("*") else s + " "


def pretty_print(unit: L.AnnotatedUnit) -> str:
    return UnitPrinter().render(unit)
