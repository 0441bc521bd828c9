"""Proof objects and checkers: equational logic EL1-EL7, the KKV nabla
system, slim redistributions and the finite consequence oracle.

Formulas are compared syntactically (after the usual canonical ordering of
set-nabla arguments); no rule is ever applied up to provable equality.
"""

import re
from itertools import combinations, product

import numpy as np

from .errors import CoalcanError
from .termlang import (BOT, TOP, Equation, ExpandedAlgebra, conj, disj, mk_nabla, neg,
                       parse_equation, parse_term, show, substitute, variables)


# ------------------------------------------------------------- judgments

class Judgment:
    """``a = b`` (equational) or ``a <= b`` (sequent a |- b)."""

    def __init__(self, lhs, rel, rhs):
        self.lhs, self.rel, self.rhs = lhs, rel, rhs

    @classmethod
    def parse(cls, text, sig=None):
        eq = parse_equation(text, sig)
        return cls(eq.lhs, eq.rel, eq.rhs)

    def __eq__(self, o):
        return isinstance(o, Judgment) and (self.lhs, self.rel, self.rhs) == (o.lhs, o.rel, o.rhs)

    def __hash__(self):
        return hash((self.lhs, self.rel, self.rhs))

    def __repr__(self):
        return f"{show(self.lhs)} {self.rel} {show(self.rhs)}"


class LiftWitness:
    """An element of F(R): ``kind`` 'set' (list of pairs), 'tup' (tuple of
    pairs, also used for plain symbol application)."""

    def __init__(self, kind, pairs):
        self.kind = kind
        self.pairs = [tuple(p) for p in pairs]

    def projections(self):
        if self.kind == "set":
            return (frozenset(show(a) for a, _ in self.pairs), frozenset(show(b) for _, b in self.pairs))
        return (tuple(a for a, _ in self.pairs), tuple(b for _, b in self.pairs))


class ProofObject:
    def __init__(self, rule, concl, premises=(), witness=None):
        self.rule = rule
        self.concl = concl
        self.premises = list(premises)
        self.witness = witness

    def __repr__(self):
        return f"ProofObject({self.rule}: {self.concl!r})"

    def size(self):
        return 1 + sum(p.size() for p in self.premises)


class Verdict:
    def __init__(self, ok, node=None, code=None, message=""):
        self.ok = ok
        self.node = node
        self.code = code
        self.message = message

    def __bool__(self):
        return self.ok

    def as_lines(self):
        if self.ok:
            return ["VERDICT: accept"]
        return ["VERDICT: reject", f"ERROR: {self.code}", f"NODE: {self.node.rule}: {self.node.concl!r}",
                f"REASON: {self.message}"]


class _Reject(Exception):
    def __init__(self, node, code, message):
        super().__init__(message)
        self.node, self.code, self.message = node, code, message


def _need(cond, node, code, message):
    if not cond:
        raise _Reject(node, code, message)


# ------------------------------------------------------- equational logic

EL_RULES = ("ax", "refl", "sym", "trans", "subst", "cong-modal", "cong-bool")


def check_el_proof(p, Ax, sig=None):
    """Accept iff every node instantiates its EL rule.  Ax: equations."""
    axset = {(e.lhs, e.rhs) for e in Ax}
    try:
        _el(p, axset, sig)
    except _Reject as r:
        return Verdict(False, r.node, r.code, r.message)
    return Verdict(True)


def _el(p, axset, sig):
    c = p.concl
    _need(isinstance(c, Judgment) and c.rel == "=", p, "RULE-MISMATCH", "EL conclusions are equations")
    for q in p.premises:
        _el(q, axset, sig)
    prem = [q.concl for q in p.premises]
    r = p.rule
    if r == "ax":
        _need((c.lhs, c.rhs) in axset, p, "RULE-MISMATCH", "not an axiom")
    elif r == "refl":
        _need(c.lhs == c.rhs, p, "RULE-MISMATCH", "reflexivity needs identical sides")
    elif r == "sym":
        _need(len(prem) == 1 and prem[0].lhs == c.rhs and prem[0].rhs == c.lhs, p, "RULE-MISMATCH",
              "symmetry must swap its premise")
    elif r == "trans":
        _need(len(prem) == 2 and prem[0].lhs == c.lhs and prem[0].rhs == prem[1].lhs and prem[1].rhs == c.rhs,
              p, "RULE-MISMATCH", "transitivity premises do not chain")
    elif r == "subst":
        _need(len(prem) == 1, p, "RULE-MISMATCH", "substitution takes one premise")
        sub = p.witness
        _need(isinstance(sub, dict), p, "BAD-SUBSTITUTION", "missing substitution table")
        _need(substitute(prem[0].lhs, sub) == c.lhs and substitute(prem[0].rhs, sub) == c.rhs, p,
              "BAD-SUBSTITUTION", "substitution does not produce the conclusion")
    elif r == "cong-bool":
        tag = c.lhs[0]
        _need(tag == c.rhs[0] and tag in ("and", "or", "not"), p, "RULE-MISMATCH",
              "boolean congruence needs matching connectives")
        n = 1 if tag == "not" else 2
        _need(len(prem) == n, p, "RULE-MISMATCH", f"{tag} congruence takes {n} premises")
        for i in range(n):
            _need(prem[i].lhs == c.lhs[1 + i] and prem[i].rhs == c.rhs[1 + i], p, "RULE-MISMATCH",
                  f"premise {i + 1} does not match argument {i + 1}")
    elif r == "cong-modal":
        _check_modal_cong(p, c.lhs, c.rhs, [(q.lhs, q.rhs) for q in prem], symmetric=True)
    else:
        raise _Reject(p, "RULE-MISMATCH", f"unknown EL rule {r}")


def _modal_parts(t):
    if t[0] == "app":
        return ("tup", "app:" + t[1], t[2])
    if t[0] == "nabla":
        return (t[1], "nabla:" + t[1], t[2])
    return None


def _check_modal_cong(p, a, b, R, symmetric):
    pa, pb = _modal_parts(a), _modal_parts(b)
    _need(pa is not None and pb is not None and pa[1] == pb[1], p, "RULE-MISMATCH",
          "congruence needs the same modal head on both sides")
    w = p.witness
    _need(isinstance(w, LiftWitness), p, "BAD-WITNESS", "missing lifting witness")
    kind = pa[0]
    _need(w.kind == kind, p, "BAD-WITNESS", f"witness kind {w.kind} does not match {kind}")
    Rs = {(x, y) for x, y in R}
    if symmetric:
        Rs |= {(y, x) for x, y in R}
    base_a, base_b = set(pa[2]), set(pb[2])
    for x, y in w.pairs:
        ok = (x, y) in Rs or (x == y)
        _need(ok, p, "BAD-WITNESS", f"pair ({show(x)}, {show(y)}) is not in the premise relation")
        _need(x in base_a and y in base_b, p, "BAD-WITNESS", "witness leaves the bases")
    pr1, pr2 = w.projections()
    if kind == "set":
        _need(pr1 == frozenset(show(x) for x in pa[2]) and pr2 == frozenset(show(y) for y in pb[2]), p,
              "BAD-WITNESS", "witness projections differ from the nabla arguments")
    else:
        _need(pr1 == tuple(pa[2]) and pr2 == tuple(pb[2]), p, "BAD-WITNESS",
              "witness projections differ from the arguments")


# ----------------------------------------------------------- the KKV system

def flat(t, op):
    """Members of a conjunction ('and') or disjunction ('or') as a frozenset;
    top/bot are the empty meet/join."""
    unit = TOP if op == "and" else BOT
    if t == unit:
        return frozenset()
    if t[0] == op:
        return flat(t[1], op) | flat(t[2], op)
    return frozenset([t])


def big(op, ts):
    ts = sorted(set(ts), key=show)
    return conj(*ts) if op == "and" else disj(*ts)


def lifted_member(F, alpha, Phi):
    """alpha (F-object of formulas) is a lifted member of Phi (F-object of
    formula sets)."""
    if F == "Pw":
        return (all(any(a in phi for phi in Phi) for a in alpha)
                and all(any(a in phi for a in alpha) for phi in Phi))
    if Phi == "star" or alpha == "star":
        return False
    return len(alpha) == len(Phi) and all(a in phi for a, phi in zip(alpha, Phi))


def _fkind(F):
    return "Pw" if F in ("Pw", "P") else "tup"


def _tuple_cap(F):
    m = re.fullmatch(r"(?:Tree|TreeOmega)(\d+)\*?", F)
    return int(m.group(1)) if m else None


def lifted_members(F, Phi):
    """All alpha with alpha lifted-member of Phi, over the union of Phi."""
    if _fkind(F) == "Pw":
        pool = sorted(set().union(*Phi) if Phi else set(), key=show)
        out = []
        for r in range(len(pool) + 1):
            for c in combinations(pool, r):
                a = frozenset(c)
                if lifted_member("Pw", a, Phi):
                    out.append(a)
        return out
    if Phi == "star":
        return []
    return [tuple(c) for c in product(*[sorted(phi, key=show) for phi in Phi])]


def _base(alpha):
    return set() if alpha == "star" else set(alpha)


def slim_redistributions(A, F="Pw"):
    """All Phi over the union of the bases of A with every alpha in A a
    lifted member of Phi.  Pw-objects are frozensets, tuple objects tuples."""
    A = list(A)
    pool = sorted(set().union(*[_base(a) for a in A]) if A else set(), key=show)
    subsets = [frozenset(c) for r in range(len(pool) + 1) for c in combinations(pool, r)]
    out = []
    if _fkind(F) == "Pw":
        for r in range(len(subsets) + 1):
            for Phi in combinations(subsets, r):
                Phi = frozenset(Phi)
                if all(lifted_member("Pw", a, Phi) for a in A):
                    out.append(Phi)
        return out
    cap = _tuple_cap(F)
    if cap is None:
        raise CoalcanError("INPUT-ERROR", f"slim redistributions need Pw or a tree functor, not {F}")
    lengths = {len(a) for a in A if a != "star"}
    if any(a == "star" for a in A):
        return []
    if len(lengths) > 1:
        return []
    ks = sorted(lengths) if lengths else range(cap + 1)
    for k in ks:
        for Phi in product(subsets, repeat=k):
            if all(lifted_member(F, a, Phi) for a in A):
                out.append(tuple(Phi))
    if not A and F.endswith("*"):
        out.append("star")
    return out


def srd_bruteforce(A, F="Pw"):
    """Independent oracle: filter all of F Pw(base) by lifted membership via
    the relation lifting of the membership relation."""
    from .coalg import Powerset, Tree, fset, ftup
    A = list(A)
    pool = sorted(set().union(*[_base(a) for a in A]) if A else set(), key=show)
    idx = {f: i for i, f in enumerate(pool)}
    subsets = list(range(1 << len(pool)))
    member = {(i, S) for i in range(len(pool)) for S in subsets if S >> i & 1}
    if _fkind(F) == "Pw":
        Fun = Powerset()
        enc = [fset(idx[x] for x in a) for a in A]
    else:
        cap = _tuple_cap(F)
        Fun = Tree(cap, omega=True, star=F.endswith("*"))
        enc = [ftup(idx[x] for x in a) for a in A]
    out = []
    for Phi in Fun.objects(subsets):
        if all(Fun.related(a, Phi, member) for a in enc):
            if Phi.kind == "set":
                out.append(frozenset(frozenset(pool[i] for i in range(len(pool)) if S >> i & 1) for S in Phi.data))
            elif Phi.kind == "star":
                out.append("star")
            else:
                out.append(tuple(frozenset(pool[i] for i in range(len(pool)) if S >> i & 1) for S in Phi.data))
    return out


def nabla_of(F, obj):
    """The nabla term over an F-object of formulas."""
    if _fkind(F) == "Pw":
        return mk_nabla("set", sorted(obj, key=show))
    return mk_nabla("tup", list(obj))


def nabla_arg(t):
    if t[0] != "nabla":
        return None
    return frozenset(t[2]) if t[1] == "set" else tuple(t[2])


def _T(F, op, Phi):
    """(T op) Phi: apply a big meet/join to each member."""
    if _fkind(F) == "Pw":
        return frozenset(big(op, phi) for phi in Phi)
    return tuple(big(op, phi) for phi in Phi)


KKV_RULES = ("ax", "refl", "cut", "join-l", "join-r", "meet-l", "meet-r", "neg-e", "neg-i", "dist",
             "nabla1", "nabla2", "nabla3")


def check_kkv_proof(p, F="Pw", Ax=()):
    """Accept iff every node instantiates its KKV rule for the functor F
    (Pw, TreeN or TreeOmegaN[*]); Ax: extra sequent axioms (pairs)."""
    axset = {(a, b) for a, b in Ax}
    try:
        _kkv(p, F, axset)
    except _Reject as r:
        return Verdict(False, r.node, r.code, r.message)
    return Verdict(True)


def _premise_keys(prem):
    return {(show(q.lhs), show(q.rhs)) for q in prem}


def _kkv(p, F, axset):
    c = p.concl
    _need(isinstance(c, Judgment) and c.rel == "<=", p, "RULE-MISMATCH", "KKV conclusions are sequents a <= b")
    for q in p.premises:
        _kkv(q, F, axset)
    prem = [q.concl for q in p.premises]
    r = p.rule
    a, b = c.lhs, c.rhs
    if r == "ax":
        _need((a, b) in axset, p, "RULE-MISMATCH", "not an axiom")
    elif r == "refl":
        _need(a == b, p, "RULE-MISMATCH", "a <= a needs identical sides")
    elif r == "cut":
        _need(len(prem) == 2 and prem[0].lhs == a and prem[1].rhs == b and prem[0].rhs == prem[1].lhs, p,
              "RULE-MISMATCH", "cut premises do not chain")
    elif r == "join-l":
        phi = flat(a, "or")
        need = {(show(x), show(b)) for x in phi}
        _need(all(q.rhs == b for q in prem), p, "RULE-MISMATCH", "premises must share the right side")
        _exact(p, need, _premise_keys(prem))
    elif r == "join-r":
        _need(len(prem) == 1 and prem[0].lhs == a and prem[0].rhs in flat(b, "or") | {BOT}, p, "RULE-MISMATCH",
              "premise right side must be a disjunct of the conclusion")
    elif r == "meet-l":
        _need(len(prem) == 1 and prem[0].rhs == b and prem[0].lhs in flat(a, "and") | {TOP}, p, "RULE-MISMATCH",
              "premise left side must be a conjunct of the conclusion")
    elif r == "meet-r":
        psi = flat(b, "and")
        need = {(show(a), show(y)) for y in psi}
        _need(all(q.lhs == a for q in prem), p, "RULE-MISMATCH", "premises must share the left side")
        _exact(p, need, _premise_keys(prem))
    elif r in ("neg-e", "neg-i"):
        _need(len(prem) == 1, p, "RULE-MISMATCH", f"{r} takes one premise")
        q = prem[0]
        phi, psi = flat(a, "and"), flat(b, "or")
        qphi, qpsi = flat(q.lhs, "and"), flat(q.rhs, "or")
        moved = qphi - phi
        _need(qpsi <= psi and len(moved) == 1 and phi <= qphi, p, "RULE-MISMATCH", "premise shape")
        (m,) = moved
        extra = psi - qpsi
        if r == "neg-e":
            # /\(phi + !x) <= \/psi  gives  /\phi <= \/(psi + x)
            _need(m[0] == "not" and extra <= {m[1]} and m[1] in psi, p, "RULE-MISMATCH",
                  "neg-e moves a negated formula to the right")
        else:
            _need(("not", m) in psi and extra <= {("not", m)}, p, "RULE-MISMATCH",
                  "neg-i moves a formula to the right under negation")
    elif r == "dist":
        _check_dist(p, a, b)
    elif r == "nabla1":
        R = [(q.lhs, q.rhs) for q in prem]
        _check_modal_cong(p, a, b, R, symmetric=False)
        kind = "set" if _fkind(F) == "Pw" else "tup"
        _need(a[1] == kind, p, "RULE-MISMATCH", f"nabla kind does not match the functor {F}")
        # every premise must be used by the witness (premise relation = R)
        used = {(show(x), show(y)) for x, y in p.witness.pairs}
        _need(used <= _premise_keys(prem) | {(show(x), show(x)) for x, _ in p.witness.pairs}, p,
              "BAD-WITNESS", "witness uses pairs without premises")
    elif r == "nabla2":
        A = [nabla_arg(t) for t in flat(a, "and")]
        _need(all(x is not None for x in A), p, "RULE-MISMATCH", "nabla2 needs a conjunction of nablas")
        need = {(show(nabla_of(F, _T(F, "and", Phi))), show(b)) if Phi != "star" else ("star", show(b))
                for Phi in slim_redistributions(A, F)}
        _exact(p, need, _premise_keys(prem))
    elif r == "nabla3":
        Phi = p.witness
        _need(Phi is not None, p, "BAD-WITNESS", "nabla3 needs the redistribution Phi as witness")
        _need(a == nabla_of(F, _T(F, "or", Phi)), p, "RULE-MISMATCH",
              "conclusion is not the nabla of the joins of Phi")
        need = {(show(nabla_of(F, al)), show(b)) for al in lifted_members(F, Phi)}
        _exact(p, need, _premise_keys(prem))
    else:
        raise _Reject(p, "RULE-MISMATCH", f"unknown KKV rule {r}")


def _exact(p, need, have):
    missing = sorted(need - have)
    if missing:
        raise _Reject(p, "MISSING-PREMISE", "absent: " + "; ".join(f"{x} <= {y}" for x, y in missing))
    extra = sorted(have - need)
    _need(not extra, p, "RULE-MISMATCH", "unexpected premise: " + "; ".join(f"{x} <= {y}" for x, y in extra))


def _check_dist(p, a, b):
    X = [flat(x, "or") for x in sorted(flat(a, "and"), key=show)]
    gammas = p.witness
    _need(isinstance(gammas, list), p, "BAD-WITNESS", "distributivity needs the list of choice functions")
    for g in gammas:
        _need(len(g) == len(X) and all(x in phi for x, phi in zip(g, X)), p, "BAD-WITNESS",
              "a listed function is not a choice function")
    want = {tuple(g) for g in product(*[sorted(phi, key=show) for phi in X])}
    _need({tuple(g) for g in gammas} == want, p, "BAD-WITNESS", "the list is not all of Choice(X)")
    rhs = {big("and", g) for g in want}
    _need(flat(b, "or") == frozenset(rhs), p, "RULE-MISMATCH", "right side is not the join over Choice(X)")


# -------------------------------------------------- axiom translations

def translate_axioms(direction, Ax):
    """toEq: sequent (a,b) -> equation (a & b, a); toSeq: equation (a,b) ->
    sequents {(a,b), (b,a)}."""
    if direction not in ("toEq", "toSeq"):
        raise CoalcanError("INPUT-ERROR", f"unknown direction {direction}")
    out = []
    for a, b in Ax:
        if direction == "toEq":
            out.append((("and", a, b), a))
        else:
            out.extend([(a, b), (b, a)])
    return out


def roundtrip_template(a, b):
    """Derivation of a <= b from the sequents of the translated axiom
    (a & b, a): cut through a & b."""
    ab = ("and", a, b)
    return ProofObject("cut", Judgment(a, "<=", b), [
        ProofObject("ax", Judgment(a, "<=", ab)),
        ProofObject("meet-l", Judgment(ab, "<=", b), [ProofObject("refl", Judgment(b, "<=", b))]),
    ])


# ------------------------------------------------------- the .proof format

def _sexp_tokens(text):
    return re.findall(r'"(?:[^"\\]|\\.)*"|[()]|[^\s()"]+', text)


def parse_sexp(text):
    toks = _sexp_tokens(re.sub(r";[^\n]*", "", text))
    pos = 0

    def go():
        nonlocal pos
        if pos >= len(toks):
            raise CoalcanError("PARSE-ERROR", "unexpected end of proof")
        t = toks[pos]
        pos += 1
        if t == "(":
            out = []
            while pos < len(toks) and toks[pos] != ")":
                out.append(go())
            if pos >= len(toks):
                raise CoalcanError("PARSE-ERROR", "unbalanced parentheses")
            pos += 1
            return out
        if t == ")":
            raise CoalcanError("PARSE-ERROR", "unexpected ')'")
        if t.startswith('"'):
            return ("str", t[1:-1].replace('\\"', '"'))
        return t

    e = go()
    if pos != len(toks):
        raise CoalcanError("PARSE-ERROR", "trailing input after the proof")
    return e


def _s(x):
    if isinstance(x, tuple) and x[0] == "str":
        return x[1]
    if isinstance(x, str):
        return x
    raise CoalcanError("PARSE-ERROR", f"expected a string, got {x!r}")


def parse_proof(text, sig=None):
    return _node(parse_sexp(text), sig)


def _node(e, sig):
    if not (isinstance(e, list) and e and e[0] == "rule" and len(e) >= 3):
        raise CoalcanError("PARSE-ERROR", "a node is (rule <tag> (concl ...) ...)")
    tag = _s(e[1])
    concl = witness = None
    prem = []
    for part in e[2:]:
        if not isinstance(part, list) or not part:
            raise CoalcanError("PARSE-ERROR", f"bad node part {part!r}")
        head = part[0]
        if head == "concl":
            concl = Judgment.parse(_s(part[1]), sig)
        elif head == "witness":
            witness = _witness(part[1:], sig)
        elif head == "premises":
            prem = [_node(q, sig) for q in part[1:]]
        else:
            raise CoalcanError("PARSE-ERROR", f"unknown node part {head}")
    if concl is None:
        raise CoalcanError("PARSE-ERROR", f"node {tag} has no conclusion")
    return ProofObject(tag, concl, prem, witness)


def _witness(parts, sig):
    if not parts:
        return None
    w = parts[0]
    if not isinstance(w, list) or not w:
        raise CoalcanError("PARSE-ERROR", "bad witness")
    head = w[0]
    term = lambda x: parse_term(_s(x), sig)          # noqa: E731
    if head == "subst":
        return {_s(k[0]): term(k[1]) for k in w[1:]}
    if head == "lift":
        kind = _s(w[1])
        return LiftWitness(kind, [(term(x[0]), term(x[1])) for x in w[2:]])
    if head == "choice":
        return [[term(x) for x in g] for g in w[1:]]
    if head == "phi":
        if len(w) > 1 and w[1] in ("set", "tup"):
            kind, sets = w[1], w[2:]
        else:
            kind, sets = "set", w[1:]
        fs = [frozenset(term(x) for x in s) for s in sets]
        return frozenset(fs) if kind == "set" else tuple(fs)
    raise CoalcanError("PARSE-ERROR", f"unknown witness {head}")


def format_proof(p, indent=0):
    pad = "  " * indent
    out = [f'{pad}(rule {p.rule} (concl "{p.concl!r}")']
    w = p.witness
    if isinstance(w, dict):
        out.append(pad + "  (witness (subst " + " ".join(f'({k} "{show(v)}")' for k, v in sorted(w.items())) + "))")
    elif isinstance(w, LiftWitness):
        out.append(pad + f"  (witness (lift {w.kind} " + " ".join(f'("{show(x)}" "{show(y)}")' for x, y in w.pairs)
                   + "))")
    elif isinstance(w, list):
        out.append(pad + "  (witness (choice " + " ".join(
            "(" + " ".join(f'"{show(x)}"' for x in g) + ")" for g in w) + "))")
    elif isinstance(w, (frozenset, tuple)):
        kind = "set" if isinstance(w, frozenset) else "tup"
        sets = sorted(w, key=lambda s: sorted(map(show, s))) if kind == "set" else list(w)
        out.append(pad + f"  (witness (phi {kind} " + " ".join(
            "(" + " ".join(f'"{show(x)}"' for x in sorted(s, key=show)) + ")" for s in sets) + "))")
    if p.premises:
        out.append(pad + "  (premises")
        for q in p.premises:
            out.append(format_proof(q, indent + 2))
        out.append(pad + "  )")
    out.append(pad + ")")
    return "\n".join(out)


# ------------------------------------------------- finite consequence oracle

class ConsequenceVerdict:
    def __init__(self, holds, counter=None, checked=0, models=0):
        self.holds = holds
        self.counter = counter            # (algebra, env) or None
        self.checked = checked
        self.models = models

    def __bool__(self):
        return self.holds


def _hosts(base, cap):
    from .lattice import PowersetBA, all_posets, downset_lattice
    out = []
    if base == "BA":
        m = 0
        while (1 << m) <= cap:
            out.append(PowersetBA(list(range(m))))
            m += 1
        return out
    seen = []
    for n in range(0, cap + 1):
        for P in all_posets(n) if n else [None]:
            if P is None:
                from .lattice import FinPoset
                P = FinPoset([], np.zeros((0, 0), dtype=bool))
            L = downset_lattice(P)
            if L.n > cap or any(L.n == M.n and L.order().is_isomorphic(M.order()) for M in seen):
                continue
            seen.append(L)
            out.append(L)
    return out


def candidate_tables(L, sym, per_symbol_budget=70000):
    """All tables for sym on L, or only those matching its annotations when
    the full space is too large."""
    n, k = L.n, sym.arity
    if k == 0:
        return [np.int32(i) for i in range(n)]
    full = n ** (n ** k)
    if full <= per_symbol_budget:
        out = []
        for vals in product(range(n), repeat=n ** k):
            out.append(np.array(vals, dtype=np.int32).reshape((n,) * k))
        return out
    if k == 1 and sym.flags[0] & {"j", "m"}:
        join = "j" in sym.flags[0]
        gens = L.join_irreducibles() if join else _meet_irreducibles(L)
        out = []
        for imgs in product(range(n), repeat=len(gens)):
            tab = np.zeros(n, dtype=np.int32)
            for x in range(n):
                below = [imgs[i] for i, g in enumerate(gens) if (L.le(g, x) if join else L.le(x, g))]
                tab[x] = L.bigjoin(below) if join else L.bigmeet(below)
            out.append(tab)
        return out
    raise CoalcanError("BUDGET-EXCEEDED", f"{full} tables for {sym.name} on {n} elements")


def _meet_irreducibles(L):
    out = []
    for i in range(L.n):
        if i == L.top:
            continue
        above = [j for j in range(L.n) if j != i and L.le(i, j)]
        if L.bigmeet(above) != i:
            out.append(i)
    return out


def el_consequence_finite(Ax, eq, sig, cap=4, budget=2_000_000):
    """Does eq hold in every expanded algebra with at most cap elements that
    validates Ax?  Returns a ConsequenceVerdict with a counter-algebra."""
    if cap > 8:
        raise CoalcanError("CAP-EXCEEDED", "carrier cap is at most 8")
    Ax = list(Ax)
    if isinstance(eq, tuple):
        eq = Equation(eq[0], "=", eq[1])
    syms = [s for s in sig.symbols.values()]
    checked = models = 0
    for L in _hosts(sig.base, cap):
        if L.n == 0:
            continue
        choices = [candidate_tables(L, s) for s in syms]
        total = 1
        for c in choices:
            total *= len(c)
        if total > budget:
            raise CoalcanError("BUDGET-EXCEEDED", f"{total} expansions on a {L.n}-element host")
        for tabs in product(*choices):
            A = ExpandedAlgebra(L, {s.name: t for s, t in zip(syms, tabs)})
            checked += 1
            if not all(A.validates(ax) for ax in Ax):
                continue
            models += 1
            env = A.counterexample(eq)
            if env is not None:
                return ConsequenceVerdict(False, (A, env), checked, models)
    return ConsequenceVerdict(True, None, checked, models)
