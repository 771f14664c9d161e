"""Tokenizer for .avc sources. Runs in two modes: code mode, where
annotation comments become single ANNOT tokens (and `/*@%*/` becomes a WRAP
marker), and annotation mode, where the annotation text itself is tokenized
with the extra logic operators (`==>`, `+%`, `\\forall`, `..`)."""

from __future__ import annotations

from dataclasses import dataclass

from .lang import Pos


class ParseError(Exception):
    def __init__(self, msg, pos: Pos, expected=()):
        super().__init__("%s: %s" % (pos, msg))
        self.msg = msg
        self.pos = pos
        self.expected = tuple(expected)


@dataclass(frozen=True)
class Token:
    kind: str       # IDENT NUM CHAR ANNOT LANNOT WRAP WRAPCAST PUNCT KW BSLASH EOF
    text: str
    pos: Pos
    value: object = None


KEYWORDS = {
    "char", "int", "unsigned", "long", "const", "u8", "u64", "size_t",
    "integer", "boolean",
    "if", "else", "while", "do", "for", "return", "break", "continue",
}

ANNOT_KEYWORDS = {
    "requires", "assigns", "ensures", "behavior", "behaviors", "assumes",
    "complete", "disjoint", "loop", "invariant", "variant", "ghost",
    "assert", "logic", "predicate", "axiom", "lemma", "pragma", "unify",
}

# three-char first so maximal munch works
PUNCT = [
    "<<=", ">>=", "==>",
    "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "..", "+%", "-%", "*%",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=",
    "?", ":", ";", ",", "(", ")", "[", "]", "{", "}",
]
PUNCT_IN_CODE = [p for p in PUNCT if p not in ("..", "==>", "+%", "-%", "*%")]

ESCAPES = {"0": 0, "n": 10, "t": 9, "r": 13, "\\": 92, "'": 39, '"': 34}


class Lexer:
    def __init__(self, text: str, mode="code", start: Pos = Pos(1, 1)):
        self.text = text
        self.mode = mode
        self.i = 0
        self.line = start.line
        self.col = start.col
        self.puncts = PUNCT if mode == "annot" else PUNCT_IN_CODE

    def pos(self) -> Pos:
        return Pos(self.line, self.col)

    def _advance(self, n):
        for _ in range(n):
            if self.i < len(self.text) and self.text[self.i] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.i += 1

    def _peek(self, off=0):
        j = self.i + off
        return self.text[j] if j < len(self.text) else ""

    def _starts(self, s):
        return self.text.startswith(s, self.i)

    def tokens(self) -> list[Token]:
        out = []
        while True:
            tok = self.next_token()
            out.append(tok)
            if tok.kind == "EOF":
                return out

    def next_token(self) -> Token:
        self._skip_space_and_plain_comments()
        pos = self.pos()
        if self.i >= len(self.text):
            return Token("EOF", "", pos)
        c = self._peek()

        if self._starts("/*@") or (self.mode == "code" and self._starts("//@")):
            # in annot mode this only happens for nested wrap markers
            # inside ghost code
            return self._annotation(pos)

        if c.isalpha() or c == "_":
            return self._ident(pos)
        if c.isdigit():
            return self._number(pos)
        if c == "'":
            return self._char(pos)
        if c == "\\" and self.mode == "annot":
            return self._backslash_keyword(pos)

        for p in self.puncts:
            if self._starts(p):
                self._advance(len(p))
                return Token("PUNCT", p, pos)
        raise ParseError("unexpected character %r" % c, pos)

    def _skip_space_and_plain_comments(self):
        while self.i < len(self.text):
            c = self._peek()
            if c in " \t\r\n":
                self._advance(1)
            elif c == "@" and self.mode == "annot":
                # decorative @ on continuation lines of /*@ ... */ blocks
                self._advance(1)
            elif self._starts("//") and not self._starts("//@"):
                while self.i < len(self.text) and self._peek() != "\n":
                    self._advance(1)
            elif self._starts("/*") and not self._starts("/*@"):
                self._advance(2)
                while self.i < len(self.text) and not self._starts("*/"):
                    self._advance(1)
                if self.i >= len(self.text):
                    raise ParseError("unterminated comment", self.pos())
                self._advance(2)
            else:
                return

    def _annotation(self, pos) -> Token:
        """/*@ ... */ or //@ ...; `/*@%*/` is the wrap marker and
        `/*@(type %)*/` the implicit-cast wrap marker."""
        if self._starts("//@"):
            self._advance(3)
            start = self.i
            startpos = self.pos()
            while self.i < len(self.text) and self._peek() != "\n":
                self._advance(1)
            return Token("ANNOT", self.text[start:self.i], pos, startpos)
        self._advance(3)
        start = self.i
        startpos = self.pos()
        depth = 0
        while self.i < len(self.text):
            if self._starts("*/") and depth == 0:
                body = self.text[start:self.i]
                self._advance(2)
                stripped = body.strip()
                if stripped == "%":
                    return Token("WRAP", "/*@%*/", pos)
                if stripped.startswith("(") and stripped.endswith("%)"):
                    return Token("WRAPCAST", stripped[1:-2].strip(), pos)
                return Token("ANNOT", body, pos, startpos)
            # allow nested /*@%*/ markers inside ghost-code annotations
            if self._starts("/*@"):
                depth += 1
                self._advance(3)
            elif self._starts("*/"):
                depth -= 1
                self._advance(2)
            else:
                self._advance(1)
        raise ParseError("unterminated annotation", pos)

    def _ident(self, pos) -> Token:
        start = self.i
        while self.i < len(self.text) and (self._peek().isalnum() or self._peek() == "_"):
            self._advance(1)
        text = self.text[start:self.i]
        if text in KEYWORDS:
            return Token("KW", text, pos)
        return Token("IDENT", text, pos)

    def _number(self, pos) -> Token:
        start = self.i
        ishex = False
        if self._starts("0x") or self._starts("0X"):
            ishex = True
            self._advance(2)
            while self.i < len(self.text) and self._peek() in "0123456789abcdefABCDEF":
                self._advance(1)
        else:
            while self.i < len(self.text) and self._peek().isdigit():
                self._advance(1)
        digits = self.text[start:self.i]
        sufstart = self.i
        while self.i < len(self.text) and self._peek() in "uUlL":
            self._advance(1)
        suffix = self.text[sufstart:self.i].upper()
        if suffix not in ("", "U", "UL", "ULL", "L", "LL"):
            raise ParseError("bad integer suffix %r" % suffix, pos)
        return Token("NUM", digits + suffix, pos,
                     (int(digits, 16 if ishex else 10), suffix, ishex))

    def _char(self, pos) -> Token:
        start = self.i
        self._advance(1)
        c = self._peek()
        if c == "\\":
            self._advance(1)
            e = self._peek()
            if e == "x":
                self._advance(1)
                h = ""
                while self._peek() in "0123456789abcdefABCDEF":
                    h += self._peek()
                    self._advance(1)
                value = int(h, 16)
            elif e in ESCAPES:
                value = ESCAPES[e]
                self._advance(1)
            else:
                raise ParseError("unknown escape \\%s" % e, pos)
        elif c == "":
            raise ParseError("unterminated character literal", pos)
        else:
            value = ord(c)
            self._advance(1)
        if self._peek() != "'":
            raise ParseError("unterminated character literal", pos)
        self._advance(1)
        return Token("CHAR", self.text[start:self.i], pos, value)

    def _backslash_keyword(self, pos) -> Token:
        self._advance(1)
        start = self.i
        while self.i < len(self.text) and (self._peek().isalnum() or self._peek() == "_"):
            self._advance(1)
        word = self.text[start:self.i]
        if not word:
            raise ParseError("stray backslash", pos)
        return Token("BSLASH", word, pos)
