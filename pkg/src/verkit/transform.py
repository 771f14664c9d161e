"""Goal transformations, applied when a goal resists the solvers as-is.

The strategy pipeline is: split the conclusion to a fixpoint (conjunctions
become separate goals, leading universals are opened with fresh constants),
unfold every defined symbol, split again, then move implication premises
into the hypotheses. Premise introduction re-splits whatever it exposes, so
the final conclusions have no top-level conjunction, no leading universal
and no leading implication.

Every step preserves validity in both directions: the original goal holds
exactly when all of its transforms do.
"""

from __future__ import annotations

from dataclasses import replace

from . import smt as S
from .vcgen import Goal


def _names(t: S.Term, out: set):
    for sub in S.walk(t):
        if isinstance(sub, S.Const):
            out.add(sub.name)
        elif isinstance(sub, S.Quant):
            for b in sub.binders:
                out.add(b.name)


def _goal_names(g: Goal) -> set:
    out: set = set()
    for t in g.hyps + (g.concl,):
        _names(t, out)
    return out


def _fresh(base: str, used: set) -> str:
    if base not in used:
        return base
    k = 1
    while "%s.%d" % (base, k) in used:
        k += 1
    return "%s.%d" % (base, k)


def _subst_avoid(t, mapping, used: set):
    """Substitution that alpha-renames quantifier binders out of the way
    of anything in `used`. `used` grows as names are claimed."""
    if isinstance(t, S.Const):
        return mapping.get(t, t)
    if isinstance(t, (S.IntLit, S.BVLit, S.BoolLit)):
        return t
    if isinstance(t, S.Op):
        return S.Op(t.name, tuple(_subst_avoid(a, mapping, used)
                                  for a in t.args), t.sort)
    if isinstance(t, S.App):
        return S.App(t.fn, tuple(_subst_avoid(a, mapping, used)
                                 for a in t.args))
    if isinstance(t, S.Quant):
        m = dict(mapping)
        binders = []
        for b in t.binders:
            if b.name in used:
                nb = S.Const(_fresh(b.name, used), b.sort)
                used.add(nb.name)
                m[b] = nb
                binders.append(nb)
            else:
                used.add(b.name)
                m.pop(b, None)
                binders.append(b)
        pats = tuple(tuple(_subst_avoid(p, m, used) for p in ps)
                     for ps in t.patterns)
        return S.Quant(t.kind, tuple(binders), _subst_avoid(t.body, m, used),
                       t.sort, pats)
    raise TypeError(t)


# ------------------------------------------------------------- inline

def _inline_term(t, used: set):
    if isinstance(t, S.App):
        args = tuple(_inline_term(a, used) for a in t.args)
        d = t.fn.definition
        if d is None:
            return S.App(t.fn, args)
        params, body = d
        opened = _subst_avoid(body, dict(zip(params, args)), used)
        return _inline_term(opened, used)
    if isinstance(t, S.Op):
        return S.Op(t.name, tuple(_inline_term(a, used) for a in t.args),
                    t.sort)
    if isinstance(t, S.Quant):
        for b in t.binders:
            used.add(b.name)
        pats = tuple(tuple(_inline_term(p, used) for p in ps)
                     for ps in t.patterns)
        return S.Quant(t.kind, t.binders, _inline_term(t.body, used),
                       t.sort, pats)
    return t


def inline(g: Goal) -> Goal:
    """Unfold every application of a symbol that carries a definition.
    Definitions cannot be recursive (declarations are order-checked), so
    this terminates."""
    used = _goal_names(g)
    hyps = tuple(_inline_term(h, used) for h in g.hyps)
    concl = _inline_term(g.concl, used)
    if hyps == g.hyps and concl == g.concl:
        return g
    return replace(g, hyps=hyps, concl=concl)


# ------------------------------------------------------------- split

def _open(g: Goal, premises: bool) -> list:
    """Strip leading universals (fresh constants), optionally move
    implication premises into the hypotheses, then split a conjunctive
    conclusion and recurse on the parts."""
    used = None
    hyps, c = g.hyps, g.concl
    while True:
        if isinstance(c, S.Quant) and c.kind == "forall":
            if used is None:
                used = _goal_names(g)
            m = {}
            for b in c.binders:
                nb = S.Const(_fresh(b.name, used), b.sort)
                used.add(nb.name)
                m[b] = nb
            c = _subst_avoid(c.body, m, used)
        elif premises and isinstance(c, S.Op) and c.name == "=>":
            hyps = hyps + (c.args[0],)
            c = c.args[1]
        else:
            break
    if isinstance(c, S.Op) and c.name == "and":
        out = []
        for i, part in enumerate(c.args):
            sub = replace(g, name="%s.%d" % (g.name, i), hyps=hyps,
                          concl=part)
            out.extend(_open(sub, premises))
        return out
    if hyps is g.hyps and c is g.concl:
        return [g]
    return [replace(g, hyps=hyps, concl=c)]


def split(g: Goal) -> list:
    return _open(g, premises=False)


def intro_premises(g: Goal) -> list:
    return _open(g, premises=True)


# ------------------------------------------------------------- pipeline

def strategy(g: Goal) -> list:
    """split / inline / split / introduce premises."""
    out = split(g)
    out = [inline(h) for h in out]
    out = [h2 for h in out for h2 in split(h)]
    return [h2 for h in out for h2 in intro_premises(h)]
