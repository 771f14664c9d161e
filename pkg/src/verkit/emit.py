"""SMT-LIB 2.6 script emission.

Each goal becomes one self-contained script: sort and symbol declarations,
the axioms whose symbols connect to the goal, the path hypotheses, and the
negated conclusion. An `unsat` answer from the solver means the goal holds.

Axiom selection is a symbol closure. A function's FnVC carries every
candidate axiom (memory region laws, integer range and retraction facts,
defining axioms for bodied logic symbols, instantiated unit axioms); a goal
only pays for the ones reachable from its own symbols, which keeps scripts
small and quantifier instantiation focused.
"""

from __future__ import annotations

from typing import Iterable

from . import smt as S
from .vcgen import FnVC, Goal


def _symbols(t: S.Term) -> set:
    return S.fun_symbols(t) | {c.name for c in S.free_consts(t)}


def select_axioms(vc: FnVC, goal: Goal) -> list:
    """Axioms connected to the goal: keep an axiom when it shares a
    function or constant symbol with the goal or with an axiom already
    kept, to a fixpoint."""
    reached = set()
    for t in goal.hyps + (goal.concl,):
        reached |= _symbols(t)
    pending = [(n, t, _symbols(t)) for n, t in vc.axioms]
    picked = set()
    changed = True
    while changed:
        changed = False
        rest = []
        for n, t, syms in pending:
            if syms & reached:
                picked.add(n)
                reached |= syms
                changed = True
            else:
                rest.append((n, t, syms))
        pending = rest
    return [(n, t) for n, t in vc.axioms if n in picked]


def declarations(terms: Iterable[S.Term]):
    """Uninterpreted sorts, function symbols and free constants of the
    given terms, each sorted by name for deterministic output."""
    sorts, funs, consts = {}, {}, {}
    for t in terms:
        for srt in S.sorts_used(t):
            if isinstance(srt, S.USort):
                sorts[srt.name] = srt
        for sub in S.walk(t):
            if isinstance(sub, S.App):
                fd = sub.fn
                old = funs.get(fd.name)
                if old is not None and (old.params, old.ret) != (fd.params, fd.ret):
                    raise ValueError("conflicting declarations of %s" % fd.name)
                funs[fd.name] = fd
        for c in S.free_consts(t):
            old = consts.get(c.name)
            if old is not None and old.sort != c.sort:
                raise ValueError("constant %s used at two sorts" % c.name)
            consts[c.name] = c
    return (sorted(sorts.values(), key=lambda s: s.name),
            sorted(funs.values(), key=lambda f: f.name),
            sorted(consts.values(), key=lambda c: c.name))


def script(vc: FnVC, goal: Goal, logic: str = "ALL") -> str:
    axioms = select_axioms(vc, goal)
    terms = [t for _, t in axioms] + list(goal.hyps) + [goal.concl]
    sorts, funs, consts = declarations(terms)
    out = []
    w = out.append
    w("; %s :: %s [%s]" % (goal.fn, goal.name, goal.kind))
    if goal.pos is not None:
        w("; source %s" % (goal.pos,))
    w("(set-logic %s)" % logic)
    for srt in sorts:
        w("(declare-sort %s 0)" % srt.name)
    for fd in funs:
        w("(declare-fun %s (%s) %s)"
          % (fd.name, " ".join(p.smt() for p in fd.params), fd.ret.smt()))
    for c in consts:
        w("(declare-const %s %s)" % (c.name, c.sort.smt()))
    for name, t in axioms:
        w("; ax %s" % name)
        w("(assert %s)" % S.to_sexpr(t))
    for h in goal.hyps:
        w("(assert %s)" % S.to_sexpr(h))
    w("(assert (not %s))" % S.to_sexpr(goal.concl))
    w("(check-sat)")
    return "\n".join(out) + "\n"


def goal_filename(goal: Goal) -> str:
    # goal names are unique within a unit and contain no path separators
    return goal.name + ".smt2"
