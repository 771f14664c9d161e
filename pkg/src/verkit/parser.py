"""Recursive-descent parser for .avc files.

Code is parsed in `code` mode; the bodies of `/*@ ... */` and `//@ ...`
comments are re-lexed in `annot` mode and parsed by the same parser class,
so annotations share the expression grammar with real code."""

from __future__ import annotations

import dataclasses
from typing import Optional

from . import lang as L
from .lexer import Lexer, ParseError, Token

TYPE_START = {"char", "unsigned", "int", "long", "const", "u8", "u64",
              "size_t", "integer", "boolean"}
ASSIGN_OPS = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%",
              "<<=": "<<", ">>=": ">>", "&=": "&", "|=": "|", "^=": "^"}
LABELS = ("Pre", "Here", "Old", "LoopEntry")


class Parser:
    def __init__(self, tokens: list[Token], mode="code", ext_wrap_cast=False):
        self.toks = tokens
        self.mode = mode
        self.ext_wrap_cast = ext_wrap_cast
        self.i = 0

    # ------------------------------------------------------------ plumbing

    def peek(self, off=0) -> Token:
        j = min(self.i + off, len(self.toks) - 1)
        return self.toks[j]

    def at(self, kind, text=None, off=0) -> bool:
        t = self.peek(off)
        return t.kind == kind and (text is None or t.text == text)

    def at_punct(self, text, off=0) -> bool:
        return self.at("PUNCT", text, off)

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def accept(self, kind, text=None) -> Optional[Token]:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind, text=None) -> Token:
        if self.at(kind, text):
            return self.next()
        t = self.peek()
        want = text or kind
        raise ParseError("expected %r, found %r" % (want, t.text or t.kind),
                         t.pos, expected=(want,))

    def expect_punct(self, text) -> Token:
        return self.expect("PUNCT", text)

    def done(self) -> bool:
        return self.at("EOF")

    # ------------------------------------------------------------ types

    def at_type(self, off=0) -> bool:
        t = self.peek(off)
        return t.kind == "KW" and t.text in TYPE_START

    def parse_base_type(self) -> L.TypeExpr:
        const0 = bool(self.accept("KW", "const"))
        t = self.expect("KW")
        base = t.text
        if base == "unsigned":
            # spellings normalize: unsigned char -> u8, unsigned long long -> u64
            if self.accept("KW", "char"):
                base = "u8"
            elif self.accept("KW", "long"):
                self.expect("KW", "long")
                base = "u64"
            elif self.accept("KW", "int"):
                base = "unsigned"
        elif base not in ("char", "int", "u8", "u64", "size_t", "integer",
                          "boolean"):
            raise ParseError("unknown type %r" % base, t.pos)
        return L.TypeExpr(base, 0, (const0,))

    def parse_type(self) -> L.TypeExpr:
        t = self.parse_base_type()
        base, ptr, consts = t.base, 0, list(t.const)
        while self.at_punct("*"):
            self.next()
            ptr += 1
            consts.append(bool(self.accept("KW", "const")))
        return L.TypeExpr(base, ptr, tuple(consts))

    # ------------------------------------------------------------ unit

    def parse_unit(self, source_name) -> L.AnnotatedUnit:
        decls: list[L.Declaration] = []
        pending_contract: Optional[L.Contract] = None
        pending_pos = None
        while not self.done():
            if self.at("ANNOT"):
                # consecutive annotation blocks form one annotation, so a
                # contract may span several //@ lines
                group = [self.next()]
                while self.at("ANNOT"):
                    group.append(self.next())
                sub = annot_parser(group, self.ext_wrap_cast)
                logic, contract, pragmas = sub.parse_toplevel_annotation()
                decls.extend(logic)
                decls.extend(pragmas)
                if contract is not None:
                    if pending_contract is not None:
                        raise ParseError("two contracts before one function",
                                         group[0].pos)
                    pending_contract = contract
                    pending_pos = group[0].pos
            elif self.at_type():
                decls.append(self.parse_function(pending_contract))
                pending_contract = None
            else:
                t = self.peek()
                raise ParseError("expected declaration, found %r"
                                 % (t.text or t.kind), t.pos)
        if pending_contract is not None:
            raise ParseError("contract not attached to a function", pending_pos)
        return L.AnnotatedUnit(tuple(decls), source_name)

    def parse_function(self, contract) -> L.FunctionDef:
        rtype = self.parse_type()
        name = self.expect("IDENT")
        self.expect_punct("(")
        params = []
        if not self.at_punct(")"):
            while True:
                ptype = self.parse_type()
                pname = self.expect("IDENT")
                params.append(L.Param(ptype, pname.text))
                if not self.accept("PUNCT", ","):
                    break
        self.expect_punct(")")
        if self.accept("PUNCT", ";"):
            body = None
        else:
            self.expect_punct("{")
            body = self.parse_stmts_until("}")
            self.expect_punct("}")
        return L.FunctionDef(name.text, tuple(params), rtype,
                             contract or L.Contract(), body, pos=name.pos)

    # ------------------------------------------------------------ statements

    def parse_stmts_until(self, closer) -> tuple[L.Stmt, ...]:
        out = []
        while not self.at_punct(closer):
            if self.done():
                raise ParseError("expected %r" % closer, self.peek().pos)
            out.extend(self.parse_stmt())
        return tuple(out)

    def parse_stmt(self) -> list[L.Stmt]:
        """Returns a list: declarations with several declarators expand, and
        loop-spec annotations merge into the following loop statement."""
        if self.at("ANNOT"):
            tok = self.next()
            sub = annot_parser([tok], self.ext_wrap_cast)
            kind, payload = sub.parse_stmt_annotation()
            if kind == "loopspec":
                loop = self.parse_stmt()
                if len(loop) != 1 or not isinstance(
                        loop[0], (L.While, L.DoWhile, L.For)):
                    raise ParseError("loop annotation must precede a loop",
                                     tok.pos)
                stmt = loop[0]
                if stmt.spec is not None:
                    raise ParseError("duplicate loop annotation", tok.pos)
                return [dataclasses.replace(stmt, spec=payload)]
            return [payload]

        t = self.peek()
        if self.at_punct(";"):
            self.next()
            return []
        if self.at_punct("{"):
            self.next()
            stmts = self.parse_stmts_until("}")
            self.expect_punct("}")
            return [L.Block(stmts, pos=t.pos)]
        if self.at("KW", "if"):
            return [self.parse_if()]
        if self.at("KW", "while"):
            return [self.parse_while()]
        if self.at("KW", "do"):
            return [self.parse_do()]
        if self.at("KW", "for"):
            return [self.parse_for()]
        if self.at("KW", "return"):
            self.next()
            value = None if self.at_punct(";") else self.parse_expr()
            self.expect_punct(";")
            return [L.Return(value, pos=t.pos)]
        if self.at("KW", "break"):
            self.next()
            self.expect_punct(";")
            return [L.Break(pos=t.pos)]
        if self.at("KW", "continue"):
            self.next()
            self.expect_punct(";")
            return [L.Continue(pos=t.pos)]
        if self.at_type():
            return self.parse_decl(ghost=False)
        expr = self.parse_expr()
        self.expect_punct(";")
        return [L.ExprStmt(expr, pos=t.pos)]

    def parse_decl(self, ghost) -> list[L.Stmt]:
        pos = self.peek().pos
        base = self.parse_base_type()
        out = []
        while True:
            dtype = base
            while self.at_punct("*"):
                self.next()
                dtype = dtype.pointer_to()
            name = self.expect("IDENT")
            init = None
            if self.accept("PUNCT", "="):
                init = self.parse_assignment()
            out.append(L.DeclStmt(dtype, name.text, init, ghost, pos=pos))
            if not self.accept("PUNCT", ","):
                break
        self.expect_punct(";")
        return out

    def parse_if(self) -> L.Stmt:
        pos = self.expect("KW", "if").pos
        self.expect_punct("(")
        cond = self.parse_expr()
        self.expect_punct(")")
        then = tuple(self.parse_stmt())
        els: tuple[L.Stmt, ...] = ()
        if self.accept("KW", "else"):
            els = tuple(self.parse_stmt())
        return L.If(cond, then, els, pos=pos)

    def parse_while(self) -> L.Stmt:
        pos = self.expect("KW", "while").pos
        self.expect_punct("(")
        cond = self.parse_expr()
        self.expect_punct(")")
        body = tuple(self.parse_stmt())
        return L.While(cond, body, None, pos=pos)

    def parse_do(self) -> L.Stmt:
        pos = self.expect("KW", "do").pos
        body = tuple(self.parse_stmt())
        self.expect("KW", "while")
        self.expect_punct("(")
        cond = self.parse_expr()
        self.expect_punct(")")
        self.expect_punct(";")
        return L.DoWhile(body, cond, None, pos=pos)

    def parse_for(self) -> L.Stmt:
        pos = self.expect("KW", "for").pos
        self.expect_punct("(")
        init: tuple = ()
        if not self.at_punct(";"):
            if self.at_type():
                decls = self.parse_decl(ghost=False)   # consumes ';'
                init = tuple(decls)
            else:
                init = tuple(self.parse_expr_list())
                self.expect_punct(";")
        else:
            self.next()
        cond = None
        if not self.at_punct(";"):
            cond = self.parse_expr()
        self.expect_punct(";")
        step: tuple = ()
        if not self.at_punct(")"):
            step = tuple(self.parse_expr_list())
        self.expect_punct(")")
        body = tuple(self.parse_stmt())
        return L.For(init or None, cond, step or None, body, None, pos=pos)

    def parse_expr_list(self) -> list[L.Expr]:
        out = [self.parse_expr()]
        while self.accept("PUNCT", ","):
            out.append(self.parse_expr())
        return out

    # ------------------------------------------------------------ expressions

    def parse_expr(self) -> L.Expr:
        return self.parse_assignment()

    def parse_assignment(self) -> L.Expr:
        left = self.parse_ternary()
        if self.at_punct("="):
            pos = self.next().pos
            right = self.parse_assignment()
            return L.Assign(left, right, pos=pos)
        for tok_text, op in ASSIGN_OPS.items():
            if self.at_punct(tok_text):
                pos = self.next().pos
                wrap = bool(self.accept("WRAP"))
                right = self.parse_assignment()
                return L.CompoundAssign(op, left, right, wrap, pos=pos)
        return left

    def parse_ternary(self) -> L.Expr:
        cond = self.parse_iff()
        if self.at_punct("?"):
            pos = self.next().pos
            then = self.parse_expr()
            self.expect_punct(":")
            els = self.parse_ternary()
            return L.Ternary(cond, then, els, pos=pos)
        return cond

    def parse_iff(self) -> L.Expr:
        # <==> is lexed as '<' '==' '>' only in annot mode via '<==' '>'?  We
        # simply do not support <==>; == on booleans covers the corpus.
        return self.parse_implies()

    def parse_implies(self) -> L.Expr:
        left = self.parse_logical_or()
        if self.mode == "annot" and self.at_punct("==>"):
            pos = self.next().pos
            right = self.parse_implies()
            return L.Binary("==>", left, right, pos=pos)
        return left

    def _binary_level(self, ops, sub, wrapable=False):
        left = sub()
        while True:
            matched = None
            for op in ops:
                if self.at_punct(op):
                    matched = op
                    break
            if matched is None:
                return left
            pos = self.next().pos
            wrap = False
            if wrapable:
                if matched.endswith("%") and len(matched) == 2:
                    matched = matched[0]
                    wrap = True
                elif self.at("WRAP"):
                    self.next()
                    wrap = True
            right = sub()
            left = L.Binary(matched, left, right, wrap, pos=pos)

    def parse_logical_or(self):
        return self._binary_level(["||"], self.parse_logical_and)

    def parse_logical_and(self):
        return self._binary_level(["&&"], self.parse_bitor)

    def parse_bitor(self):
        return self._binary_level(["|"], self.parse_bitxor)

    def parse_bitxor(self):
        return self._binary_level(["^"], self.parse_bitand)

    def parse_bitand(self):
        return self._binary_level(["&"], self.parse_equality)

    def parse_equality(self):
        return self._binary_level(["==", "!="], self.parse_relational)

    def parse_relational(self):
        return self._binary_level(["<=", ">=", "<", ">"], self.parse_shift)

    def parse_shift(self):
        return self._binary_level(["<<", ">>"], self.parse_additive,
                                  wrapable=True)

    def parse_additive(self):
        ops = ["+", "-", "+%", "-%"] if self.mode == "annot" else ["+", "-"]
        return self._binary_level(ops, self.parse_multiplicative,
                                  wrapable=True)

    def parse_multiplicative(self):
        ops = ["*", "/", "%", "*%"] if self.mode == "annot" else ["*", "/", "%"]
        return self._binary_level(ops, self.parse_unary, wrapable=True)

    def parse_unary(self) -> L.Expr:
        t = self.peek()
        if self.at_punct("("):
            cast = self.try_parse_cast()
            if cast is not None:
                return cast
        if self.at("WRAPCAST"):
            if not self.ext_wrap_cast:
                raise ParseError(
                    "implicit wrap-cast annotation requires the "
                    "ext-implicit-wrap-cast extension", t.pos)
            tok = self.next()
            ctype = parse_type_text(tok.text, tok.pos)
            operand = self.parse_unary()
            return L.Cast(ctype, operand, wrap=True, implicit=True, pos=tok.pos)
        if self.at_punct("-"):
            self.next()
            wrap = bool(self.accept("WRAP"))
            return L.Unary("-", self.parse_unary(), wrap, pos=t.pos)
        if self.at_punct("!"):
            self.next()
            return L.Unary("!", self.parse_unary(), pos=t.pos)
        if self.at_punct("~"):
            self.next()
            return L.Unary("~", self.parse_unary(), pos=t.pos)
        if self.at_punct("*"):
            self.next()
            return L.Unary("*", self.parse_unary(), pos=t.pos)
        if self.at_punct("++") or self.at_punct("--"):
            op = self.next().text
            wrap = bool(self.accept("WRAP"))
            target = self.parse_unary()
            return L.IncDec(op, True, target, wrap, pos=t.pos)
        return self.parse_postfix()

    def try_parse_cast(self) -> Optional[L.Expr]:
        """At '('. Parses `(type)expr`, `(type)/*@%*/expr`, `(type %)expr`."""
        if not self.at_type(off=1):
            return None
        save = self.i
        pos = self.next().pos          # '('
        ctype = self.parse_type()
        wrap = False
        if self.mode == "annot" and self.accept("PUNCT", "%"):
            wrap = True
        if not self.at_punct(")"):
            self.i = save
            return None
        self.next()
        if self.accept("WRAP"):
            wrap = True
        operand = self.parse_unary()
        return L.Cast(ctype, operand, wrap, pos=pos)

    def parse_postfix(self) -> L.Expr:
        expr = self.parse_primary()
        while True:
            t = self.peek()
            if self.at_punct("++") or self.at_punct("--"):
                op = self.next().text
                wrap = bool(self.accept("WRAP"))
                expr = L.IncDec(op, False, expr, wrap, pos=t.pos)
            elif self.at_punct("["):
                self.next()
                idx = self.parse_index_expr()
                self.expect_punct("]")
                expr = L.Index(expr, idx, pos=t.pos)
            else:
                return expr

    def parse_index_expr(self) -> L.Expr:
        """Array index; in annot mode `lo..hi` ranges are allowed here
        (assigns clauses like dest[0..n-1])."""
        lo = self.parse_expr()
        if self.mode == "annot" and self.at_punct(".."):
            pos = self.next().pos
            hi = self.parse_expr()
            return L.RangeExpr(lo, hi, pos=pos)
        return lo

    def parse_primary(self) -> L.Expr:
        t = self.peek()
        if self.at_punct("("):
            self.next()
            inner = self.parse_expr()
            if self.mode == "annot" and self.at_punct(".."):
                pos = self.next().pos
                hi = self.parse_expr()
                self.expect_punct(")")
                return L.RangeExpr(inner, hi, pos=pos)
            self.expect_punct(")")
            return inner
        if t.kind == "NUM":
            self.next()
            value, suffix, ishex = t.value
            return L.IntConst(value, suffix, hex=ishex, pos=t.pos)
        if t.kind == "CHAR":
            self.next()
            return L.IntConst(t.value, char=True, pos=t.pos)
        if t.kind == "IDENT":
            self.next()
            name = t.text
            if name == "NULL":
                return L.NullPtr(pos=t.pos)
            label = None
            if self.mode == "annot" and self.at_punct("{") \
                    and self.peek(1).kind == "IDENT" and self.at_punct("}", 2):
                self.next()
                label = self.expect("IDENT").text
                self.expect_punct("}")
            if self.at_punct("("):
                self.next()
                args = []
                if not self.at_punct(")"):
                    args = self.parse_expr_list()
                self.expect_punct(")")
                return L.Call(name, tuple(args), label, pos=t.pos)
            if label is not None:
                raise ParseError("label on non-call", t.pos)
            return L.Ident(name, pos=t.pos)
        if t.kind == "BSLASH":
            return self.parse_backslash()
        raise ParseError("expected expression, found %r"
                         % (t.text or t.kind), t.pos)

    def parse_backslash(self) -> L.Expr:
        t = self.next()
        word = t.text
        if word in ("forall", "exists"):
            binders = self.parse_binders()
            self.expect_punct(";")
            body = self.parse_expr()
            return L.QuantExpr(word, binders, body, pos=t.pos)
        if word == "result":
            return L.Result(pos=t.pos)
        if word == "null":
            return L.NullPtr(pos=t.pos)
        if word == "true":
            return L.BoolConst(True, pos=t.pos)
        if word == "false":
            return L.BoolConst(False, pos=t.pos)
        if word == "at":
            self.expect_punct("(")
            operand = self.parse_expr()
            self.expect_punct(",")
            label = self.expect("IDENT").text
            self.expect_punct(")")
            return L.At(operand, label, pos=t.pos)
        if word == "old":
            self.expect_punct("(")
            operand = self.parse_expr()
            self.expect_punct(")")
            return L.At(operand, "Old", pos=t.pos)
        if word == "valid":
            self.expect_punct("(")
            arg = self.parse_expr()
            self.expect_punct(")")
            return normalize_valid(arg, t.pos)
        raise ParseError("unknown construct \\%s" % word, t.pos)

    def parse_binders(self) -> tuple[tuple[L.TypeExpr, str], ...]:
        groups = []
        while True:
            base = self.parse_base_type()
            while True:
                btype = base
                while self.at_punct("*"):
                    self.next()
                    btype = btype.pointer_to()
                name = self.expect("IDENT")
                groups.append((btype, name.text))
                if not self.at_punct(","):
                    return tuple(groups)
                self.next()
                if self.at_type():
                    break

    # ------------------------------------------------------------ annotations

    def parse_toplevel_annotation(self):
        """Annotation at unit scope: logic declarations, a contract,
        pragmas, or logic declarations followed by a contract."""
        logic: list[L.LogicDecl] = []
        pragmas: list[L.Pragma] = []
        while not self.done():
            t = self.peek()
            if self.at("IDENT", "pragma"):
                self.next()
                name = self.expect("IDENT").text
                self.expect_punct("(")
                args = []
                if not self.at_punct(")"):
                    args.append(self.next().text)
                    while self.accept("PUNCT", ","):
                        args.append(self.next().text)
                self.expect_punct(")")
                self.expect_punct(";")
                pragmas.append(L.Pragma(name, tuple(args), pos=t.pos))
                continue
            if self.at("IDENT", "logic") or self.at("IDENT", "predicate") \
                    or self.at("IDENT", "axiom") or self.at("IDENT", "lemma"):
                logic.append(self.parse_logic_decl())
                continue
            break
        if self.done():
            return logic, None, pragmas
        contract = self.parse_contract()
        return logic, contract, pragmas

    def parse_logic_decl(self) -> L.LogicDecl:
        t = self.next()
        kind = t.text
        if kind in ("axiom", "lemma"):
            name = self.expect("IDENT").text
            labels = self.parse_label_params()
            self.expect_punct(":")
            body = self.parse_expr()
            self.expect_punct(";")
            return L.LogicDecl(kind, name, None, (), body, labels, pos=t.pos)
        ret = None
        if kind == "logic":
            ret = self.parse_type()
        name = self.expect("IDENT").text
        labels = self.parse_label_params()
        self.expect_punct("(")
        params = []
        if not self.at_punct(")"):
            while True:
                ptype = self.parse_type()
                pname = self.expect("IDENT").text
                params.append(L.Param(ptype, pname))
                if not self.accept("PUNCT", ","):
                    break
        self.expect_punct(")")
        body = None
        if self.accept("PUNCT", "="):
            body = self.parse_expr()
        self.expect_punct(";")
        return L.LogicDecl(kind, name, ret, tuple(params), body, labels,
                           pos=t.pos)

    def parse_label_params(self) -> tuple[str, ...]:
        if not self.at_punct("{"):
            return ()
        self.next()
        labels = [self.expect("IDENT").text]
        while self.accept("PUNCT", ","):
            labels.append(self.expect("IDENT").text)
        self.expect_punct("}")
        return tuple(labels)

    def parse_contract(self) -> L.Contract:
        requires, ensures, behaviors = [], [], []
        assigns = None
        complete = disjoint = False
        while not self.done():
            t = self.peek()
            if self.at("IDENT", "requires"):
                self.next()
                requires.append(self.parse_expr())
                self.expect_punct(";")
            elif self.at("IDENT", "assigns"):
                self.next()
                items = self.parse_assigns_items()
                if assigns is not None:
                    assigns = assigns + items
                else:
                    assigns = items
                self.expect_punct(";")
            elif self.at("IDENT", "ensures"):
                self.next()
                ensures.append(self.parse_expr())
                self.expect_punct(";")
            elif self.at("IDENT", "behavior"):
                self.next()
                name = self.expect("IDENT").text
                self.expect_punct(":")
                behaviors.append(self.parse_behavior(name, t.pos))
            elif self.at("IDENT", "complete"):
                self.next()
                self.expect("IDENT", "behaviors")
                self.expect_punct(";")
                complete = True
            elif self.at("IDENT", "disjoint"):
                self.next()
                self.expect("IDENT", "behaviors")
                self.expect_punct(";")
                disjoint = True
            else:
                raise ParseError("unexpected %r in contract"
                                 % (t.text or t.kind), t.pos)
        return L.Contract(tuple(requires), assigns, tuple(ensures),
                          tuple(behaviors), complete, disjoint)

    def parse_behavior(self, name, pos) -> L.Behavior:
        assumes, ensures = [], []
        while True:
            if self.at("IDENT", "assumes"):
                self.next()
                assumes.append(self.parse_expr())
                self.expect_punct(";")
            elif self.at("IDENT", "ensures"):
                self.next()
                ensures.append(self.parse_expr())
                self.expect_punct(";")
            else:
                return L.Behavior(name, tuple(assumes), tuple(ensures),
                                  pos=pos)

    def parse_assigns_items(self) -> tuple[L.AssignsItem, ...]:
        if self.at("BSLASH") and self.peek().text == "nothing":
            self.next()
            return ()
        items = [self.parse_assigns_item()]
        while self.accept("PUNCT", ","):
            items.append(self.parse_assigns_item())
        return tuple(items)

    def parse_assigns_item(self) -> L.AssignsItem:
        expr = self.parse_unary()
        if isinstance(expr, L.Index) and isinstance(expr.index, L.RangeExpr):
            return L.AssignsItem(expr.base, expr.index.lo, expr.index.hi)
        if isinstance(expr, L.Unary) and expr.op == "*":
            inner = expr.operand
            if isinstance(inner, L.Binary) and inner.op == "+" \
                    and isinstance(inner.right, L.RangeExpr):
                return L.AssignsItem(inner.left, inner.right.lo,
                                     inner.right.hi)
        return L.AssignsItem(expr)

    def parse_stmt_annotation(self):
        """Annotation in statement position: loop spec, ghost code,
        assert, or unify pragma."""
        t = self.peek()
        if self.at("IDENT", "loop"):
            invariants, variant = [], None
            while not self.done():
                self.expect("IDENT", "loop")
                if self.accept("IDENT", "invariant"):
                    invariants.append(self.parse_expr())
                elif self.accept("IDENT", "variant"):
                    if variant is not None:
                        raise ParseError("duplicate loop variant", t.pos)
                    variant = self.parse_expr()
                else:
                    raise ParseError("expected invariant or variant", t.pos)
                self.expect_punct(";")
            return "loopspec", L.LoopSpec(tuple(invariants), variant)
        if self.at("IDENT", "ghost"):
            self.next()
            if self.at_type():
                decls = self.parse_decl(ghost=True)
                if len(decls) != 1:
                    raise ParseError("one declarator per ghost decl", t.pos)
                if not self.done():
                    raise ParseError("trailing tokens after ghost decl", t.pos)
                return "stmt", decls[0]
            expr = self.parse_expr()
            self.expect_punct(";")
            if not self.done():
                raise ParseError("trailing tokens after ghost stmt", t.pos)
            return "stmt", L.ExprStmt(expr, ghost=True, pos=t.pos)
        if self.at("IDENT", "assert"):
            self.next()
            formula = self.parse_expr()
            self.expect_punct(";")
            return "stmt", L.AssertStmt(formula, pos=t.pos)
        if self.at("IDENT", "unify"):
            self.next()
            self.expect_punct("(")
            a = self.expect("IDENT").text
            self.expect_punct(",")
            b = self.expect("IDENT").text
            self.expect_punct(")")
            self.expect_punct(";")
            return "stmt", L.UnifyPragma(a, b, pos=t.pos)
        raise ParseError("unexpected annotation %r" % (t.text or t.kind),
                         t.pos)


def normalize_valid(arg: L.Expr, pos) -> L.Valid:
    """\\valid(p), \\valid(p+(lo..hi)), \\valid(p[lo..hi] is not allowed)."""
    if isinstance(arg, L.Binary) and arg.op == "+" \
            and isinstance(arg.right, L.RangeExpr):
        return L.Valid(arg.left, arg.right.lo, arg.right.hi, pos=pos)
    if isinstance(arg, L.RangeExpr):
        raise ParseError("range must be attached to a base pointer", pos)
    return L.Valid(arg, None, None, pos=pos)


def parse_type_text(text: str, pos) -> L.TypeExpr:
    toks = Lexer(text, mode="annot", start=pos).tokens()
    p = Parser(toks, mode="annot")
    t = p.parse_type()
    if not p.done():
        raise ParseError("trailing tokens in type", pos)
    return t


def annot_parser(toks: list[Token], ext_wrap_cast) -> Parser:
    merged: list[Token] = []
    for tok in toks:
        sub = Lexer(tok.text, mode="annot", start=tok.value or tok.pos)
        merged.extend(t for t in sub.tokens() if t.kind != "EOF")
    merged.append(Token("EOF", "", toks[-1].pos))
    return Parser(merged, mode="annot", ext_wrap_cast=ext_wrap_cast)


def parse_unit(text: str, source_name="<unit>", ext_wrap_cast=False) -> L.AnnotatedUnit:
    toks = Lexer(text, mode="code").tokens()
    return Parser(toks, mode="code",
                  ext_wrap_cast=ext_wrap_cast).parse_unit(source_name)
