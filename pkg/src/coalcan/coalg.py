"""Concrete Set functors, relation lifting, one-step semantics and finite
coalgebraic model checking.

Carriers are handled internally as ``0..n-1`` so that subsets are bitmasks;
functor objects (:class:`FObj`) carry element indices, and the
``Coalgebra`` class keeps the names for printing.
"""

import re
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import CoalcanError
from .termlang import (Signature, Symbol, children, classical_sig, gml_sig, heyting_sig,
                       nabla_sig, parse_term, show, variables, Equation)

# ------------------------------------------------------------ functor objects


def _key(x):
    return (type(x).__name__, repr(x))


@dataclass(frozen=True)
class FObj:
    """An element of FX.  ``kind`` is one of set, bag, tup, star, rel, poly.

    payloads: set -> frozenset; bag -> sorted tuple of (x, m) with m >= 1;
    tup -> tuple; star -> None; rel -> sorted tuple of (symbol, frozenset of
    tuples); poly -> (symbol, tuple).
    """
    kind: str
    data: object

    def elements(self):
        k, d = self.kind, self.data
        if k == "set":
            return set(d)
        if k == "bag":
            return {x for x, _ in d}
        if k == "tup":
            return set(d)
        if k == "star":
            return set()
        if k == "rel":
            return {x for _, comp in d for tup in comp for x in tup}
        if k == "poly":
            return set(d[1])
        raise CoalcanError("INPUT-ERROR", f"unknown functor object kind {k}")

    def component(self, sym):
        for s, comp in self.data:
            if s == sym:
                return comp
        return frozenset()

    def mult(self, x):
        for y, m in self.data:
            if y == x:
                return m
        return 0


def fset(xs):
    return FObj("set", frozenset(xs))


def fbag(table):
    return FObj("bag", tuple(sorted(((x, m) for x, m in dict(table).items() if m > 0), key=lambda p: _key(p[0]))))


def ftup(xs):
    return FObj("tup", tuple(xs))


STAR = FObj("star", None)


def frel(comps):
    return FObj("rel", tuple(sorted((s, frozenset(c)) for s, c in dict(comps).items())))


def fpoly(sym, xs):
    return FObj("poly", (sym, tuple(xs)))


def rename(obj, f):
    """Apply a function on elements (no saturation or closure)."""
    k, d = obj.kind, obj.data
    if k == "set":
        return fset(f(x) for x in d)
    if k == "bag":
        acc = {}
        for x, m in d:
            acc[f(x)] = acc.get(f(x), 0) + m
        return fbag(acc)
    if k == "tup":
        return ftup(f(x) for x in d)
    if k == "star":
        return obj
    if k == "rel":
        return frel({s: {tuple(f(x) for x in t) for t in c} for s, c in d})
    return fpoly(d[0], [f(x) for x in d[1]])


def format_obj(obj, name=str):
    k, d = obj.kind, obj.data
    if k == "set":
        return "{" + ",".join(sorted(name(x) for x in d)) + "}"
    if k == "bag":
        return "bag{" + ",".join(sorted(f"{name(x)}:{m}" for x, m in d)) + "}"
    if k == "tup":
        return "tup(" + ",".join(name(x) for x in d) + ")"
    if k == "star":
        return "star"
    if k == "rel":
        parts = []
        unit = False
        for s, c in d:
            tups = sorted("(" + ",".join(name(x) for x in t) + ")" for t in c if t)
            if () in c:
                unit = True
            if tups:
                parts.append(f"{s}:" + ",".join(tups))
        return "rel{" + "; ".join(parts) + "} " + ("unit" if unit else "nonunit")
    return d[0] + "(" + ",".join(name(x) for x in d[1]) + ")"


_LIT = re.compile(r"\s*(bag\{|rel\{|tup\(|star\b|\{)")


def parse_obj(text, elem, rel_symbols=None):
    """Parse a functor-object literal; ``elem`` maps a name to its index.

    ``rel{(a,b),(c,d)} unit`` gives every non-nullary symbol of
    ``rel_symbols`` (name -> arity) the listed tuples of its arity and every
    nullary one the empty tuple when ``unit``.  The named form
    ``rel{mul:(a,b); ldiv:(b,a)} nonunit`` targets single symbols.
    """
    s = text.strip()

    def items(body):
        return [x.strip() for x in body.split(",") if x.strip()]

    def el(x):
        if x not in elem:
            raise CoalcanError("PARSE-ERROR", f"unknown carrier element {x!r}")
        return elem[x]

    if s == "star":
        return STAR
    if s.startswith("bag{") and s.endswith("}"):
        tab = {}
        for it in items(s[4:-1]):
            if ":" not in it:
                raise CoalcanError("PARSE-ERROR", f"bag entry {it!r} needs a multiplicity")
            x, m = it.split(":")
            if not m.strip().isdigit():
                raise CoalcanError("PARSE-ERROR", f"bad multiplicity {m!r}")
            tab[el(x.strip())] = tab.get(el(x.strip()), 0) + int(m)
        return fbag(tab)
    if s.startswith("tup(") and s.endswith(")"):
        return ftup(el(x) for x in items(s[4:-1]))
    if s.startswith("rel{"):
        m = re.fullmatch(r"rel\{(.*)\}\s*(unit|nonunit)?", s, re.S)
        if not m:
            raise CoalcanError("PARSE-ERROR", f"bad relational literal {s!r}")
        body, unit = m.group(1), m.group(2) == "unit"
        syms = dict(rel_symbols or {})
        comps = {k: set() for k in syms}
        for chunk in [c for c in body.split(";") if c.strip()]:
            target = None
            if ":" in chunk:
                target, chunk = chunk.split(":", 1)
                target = target.strip()
                if syms and target not in syms:
                    raise CoalcanError("PARSE-ERROR", f"unknown relational symbol {target}")
                comps.setdefault(target, set())
            tups = [tuple(el(x.strip()) for x in t.split(",") if x.strip())
                    for t in re.findall(r"\(([^()]*)\)", chunk)]
            for t in tups:
                if target is not None:
                    comps[target].add(t)
                else:
                    hit = [k for k, a in syms.items() if a == len(t) and a > 0]
                    if not hit:
                        hit = [f"r{len(t)}"]
                    for k in hit:
                        comps.setdefault(k, set()).add(t)
        for k, a in syms.items():
            if a == 0 and unit:
                comps[k].add(())
        if not syms and unit:
            comps["unit"] = {()}
        return frel(comps)
    if s.startswith("{") and s.endswith("}"):
        return fset(el(x) for x in items(s[1:-1]))
    raise CoalcanError("PARSE-ERROR", f"bad functor object literal {s!r}")


# ----------------------------------------------------------------- functors

def _subsets(xs):
    xs = list(xs)
    for r in range(len(xs) + 1):
        for c in combinations(xs, r):
            yield frozenset(c)


def _pw_related(S, T, R):
    return (all(any((s, t) in R for t in T) for s in S)
            and all(any((s, t) in R for s in S) for t in T))


class Functor:
    name = "F"
    finitary = True

    def objects(self, X, poset=None):
        raise NotImplementedError

    def fmap(self, f, obj):
        return rename(obj, f)

    def related(self, a, b, R):
        """(a, b) in the lifted relation of R (a set of pairs)."""
        raise NotImplementedError

    def lift(self, R, X, Y):
        A, B = self.objects(X), self.objects(Y)
        return {(a, b) for a in A for b in B if self.related(a, b, R)}

    def base(self, obj):
        return frozenset(obj.elements())

    def validate(self, obj, n):
        if not all(0 <= x < n for x in obj.elements()):
            raise CoalcanError("INPUT-ERROR", f"{format_obj(obj)} leaves the carrier")

    def __repr__(self):
        return self.name


class Powerset(Functor):
    """P (full powerset) or Pw (finite powerset); equal on finite carriers."""

    def __init__(self, finite=True):
        self.name = "Pw" if finite else "P"
        self.finitary = finite

    def objects(self, X, poset=None):
        return [fset(s) for s in _subsets(X)]

    def related(self, a, b, R):
        return _pw_related(a.data, b.data, R)

    def validate(self, obj, n):
        if obj.kind != "set":
            raise CoalcanError("INPUT-ERROR", f"{self.name} expects a set literal")
        super().validate(obj, n)


class Bag(Functor):
    """Multisets with multiplicities saturating at N."""

    def __init__(self, N):
        if N < 1:
            raise CoalcanError("INPUT-ERROR", "bag cap must be positive")
        self.N = N
        self.name = f"Bag{N}"

    def objects(self, X, poset=None):
        X = list(X)
        return [fbag(dict(zip(X, ms))) for ms in product(range(self.N + 1), repeat=len(X))]

    def fmap(self, f, obj):
        acc = {}
        for x, m in obj.data:
            acc[f(x)] = min(self.N, acc.get(f(x), 0) + m)
        return fbag(acc)

    def saturate(self, obj):
        return fbag({x: min(self.N, m) for x, m in obj.data})

    def related(self, a, b, R):
        # a weight table on R whose saturated marginals are a and b
        N = self.N
        R = sorted(R, key=lambda p: (_key(p[0]), _key(p[1])))
        ta, tb = dict(a.data), dict(b.data)
        R = [(x, y) for x, y in R if x in ta and y in tb]
        xs, ys = sorted(ta, key=_key), sorted(tb, key=_key)

        def go(i, ra, rb):
            if i == len(R):
                return all(ra.get(x, 0) == ta[x] for x in xs) and all(rb.get(y, 0) == tb[y] for y in ys)
            x, y = R[i]
            for m in range(N + 1):
                na = min(N, ra.get(x, 0) + m)
                nb = min(N, rb.get(y, 0) + m)
                if m and (na > ta[x] or nb > tb[y]):
                    break
                ra2, rb2 = dict(ra), dict(rb)
                ra2[x], rb2[y] = na, nb
                if go(i + 1, ra2, rb2):
                    return True
            return False

        return go(0, {}, {})

    def validate(self, obj, n):
        if obj.kind != "bag":
            raise CoalcanError("INPUT-ERROR", f"{self.name} expects a bag literal")
        if any(m > self.N for _, m in obj.data):
            raise CoalcanError("INPUT-ERROR", f"multiplicity above the cap {self.N}")
        super().validate(obj, n)


class Tree(Functor):
    """Tuples of length at most n (TreeN), or the arity-capped S_omega with an
    optional extra point star (TreeOmegaCap)."""

    def __init__(self, n, omega=False, star=False):
        self.n = n
        self.omega = omega
        self.star = star
        self.name = (f"TreeOmega{n}" + ("*" if star else "")) if omega else f"Tree{n}"

    def objects(self, X, poset=None):
        X = list(X)
        out = [ftup(t) for k in range(self.n + 1) for t in product(X, repeat=k)]
        if self.star:
            out.append(STAR)
        return out

    def related(self, a, b, R):
        if a.kind == "star" or b.kind == "star":
            return a == b
        return len(a.data) == len(b.data) and all((x, y) in R for x, y in zip(a.data, b.data))

    def validate(self, obj, n):
        if obj.kind == "star":
            if not self.star:
                raise CoalcanError("INPUT-ERROR", f"{self.name} has no star point")
            return
        if obj.kind != "tup" or len(obj.data) > self.n:
            raise CoalcanError("INPUT-ERROR", f"{self.name} expects a tuple of length <= {self.n}")
        super().validate(obj, n)


class Poly(Functor):
    """Plain polynomial functor: a sum over symbols of X^arity."""

    def __init__(self, arities, name="Poly"):
        self.arities = dict(arities)
        self.name = name

    def objects(self, X, poset=None):
        X = list(X)
        return [fpoly(s, t) for s in sorted(self.arities) for t in product(X, repeat=self.arities[s])]

    def related(self, a, b, R):
        return a.data[0] == b.data[0] and all((x, y) in R for x, y in zip(a.data[1], b.data[1]))


def _tuple_le(P, s, t, ton):
    for x, y, d in zip(s, t, ton):
        if d == "anti":
            x, y = y, x
        if not P.le(x, y):
            return False
    return True


def convex_closure(S, P, ton):
    """All tuples lying between two members of S in the twisted product order."""
    if P is None or not S:
        return frozenset(S)
    n = len(P)
    k = len(ton)
    out = set(S)
    for t in product(range(n), repeat=k):
        if t in out:
            continue
        if any(_tuple_le(P, a, t, ton) for a in S) and any(_tuple_le(P, t, b, ton) for b in S):
            out.add(t)
    return frozenset(out)


def em_le(S, T, P, ton):
    """Egli-Milner order on sets of tuples (antitone slots reversed)."""
    return (all(any(_tuple_le(P, s, t, ton) for t in T) for s in S)
            and all(any(_tuple_le(P, s, t, ton) for s in S) for t in T))


class ConvexRel(Functor):
    """The relational functor for a signature: one convex set of tuples per
    symbol, ordered componentwise by Egli-Milner."""

    def __init__(self, sig):
        self.sig = sig
        self.symbols = [(s.name, s.arity, list(s.tonicity)) for s in sig.symbols.values()]
        self.name = f"Rel[{sig.name}]"

    def arities(self):
        return {s: a for s, a, _ in self.symbols}

    def objects(self, X, poset=None):
        X = list(X)
        per = []
        for s, a, ton in self.symbols:
            tups = list(product(X, repeat=a))
            if len(tups) > 12:
                raise CoalcanError("BUDGET-EXCEEDED", f"too many relational objects for {s}")
            cs = {convex_closure(c, poset, ton) for c in _subsets(tups)}
            per.append([(s, c) for c in sorted(cs, key=lambda c: (len(c), sorted(c)))])
        return [frel(dict(choice)) for choice in product(*per)]

    def fmap(self, f, obj, poset=None):
        tons = {s: ton for s, _, ton in self.symbols}
        return frel({s: convex_closure({tuple(f(x) for x in t) for t in c}, poset, tons.get(s, []))
                     for s, c in obj.data})

    def related(self, a, b, R):
        for s, _, _ in self.symbols:
            A, B = a.component(s), b.component(s)
            ok = (all(any(all((x, y) in R for x, y in zip(u, v)) for v in B) for u in A)
                  and all(any(all((x, y) in R for x, y in zip(u, v)) for u in A) for v in B))
            if not ok:
                return False
        return True

    def le(self, a, b, poset):
        return all(em_le(a.component(s), b.component(s), poset, ton) for s, _, ton in self.symbols)

    def validate(self, obj, n):
        if obj.kind != "rel":
            raise CoalcanError("INPUT-ERROR", f"{self.name} expects a rel literal")
        ar = self.arities()
        for s, c in obj.data:
            if s not in ar or any(len(t) != ar[s] for t in c):
                raise CoalcanError("INPUT-ERROR", f"component {s} does not match the signature")
        super().validate(obj, n)


def functor_from_name(name, sig=None):
    if name in ("P", "Pw", "Up"):
        return Powerset(finite=name != "P")
    m = re.fullmatch(r"Bag(\d+)", name)
    if m:
        return Bag(int(m.group(1)))
    m = re.fullmatch(r"Tree(\d+)", name)
    if m:
        return Tree(int(m.group(1)))
    m = re.fullmatch(r"TreeOmega(\d+)(\*?)", name)
    if m:
        return Tree(int(m.group(1)), omega=True, star=bool(m.group(2)))
    if name.startswith("Rel"):
        if sig is None:
            raise CoalcanError("INPUT-ERROR", "relational functor needs a signature")
        return ConvexRel(sig)
    raise CoalcanError("INPUT-ERROR", f"unknown functor {name}")


def lift_relation(F, R, X, Y=None):
    """The lifted relation as a set of pairs of functor objects."""
    return F.lift(set(R), list(X), list(X if Y is None else Y))


def base(F, obj):
    return F.base(obj)


def base_bruteforce(F, obj, X):
    """Smallest U with obj in the image of FU (test oracle)."""
    best = None
    for U in _subsets(X):
        if obj in set(F.objects(sorted(U, key=_key))):
            if best is None or len(U) < len(best):
                best = U
    return best


# -------------------------------------------------------------------- logics

def _grade(name):
    m = re.search(r"(\d+)$", name)
    return int(m.group(1)) if m else 1


def tree_sig(n):
    """Symbols node0..noden: node_k is k-ary, preserving meets and joins."""
    return Signature("BA", [Symbol(f"node{k}", k, ["iso"] * k, [{"j", "m"}] * k, "join-law")
                            for k in range(n + 1)], name="tree")


class Logic:
    """A concrete logic: functor, signature and one-step satisfaction.

    ``step(node, sets, obj)`` decides obj in delta(node applied to sets)
    where sets are bitmasks over the carrier.
    """

    def __init__(self, name, functor, sig, kind, poset_carrier=False):
        self.name = name
        self.functor = functor
        self.sig = sig
        self.kind = kind
        self.poset_carrier = poset_carrier

    def __repr__(self):
        return f"Logic({self.name})"

    def step(self, node, sets, obj):
        k = self.kind
        if node[0] == "nabla":
            return self._nabla(node[1], sets, obj)
        sym = node[1]
        if k == "classical":
            if sym == "dia":
                return any(sets[0] >> x & 1 for x in obj.data)
            return all(sets[0] >> x & 1 for x in obj.data)
        if k == "gml":
            U = sets[0]
            return sum(m for x, m in obj.data if U >> x & 1) >= _grade(sym)
        if k == "tree":
            if obj.kind != "tup" or len(obj.data) != len(sets):
                return False
            return all(U >> x & 1 for U, x in zip(sets, obj.data))
        if k == "intuitionistic":
            U, V = sets
            return all(not U >> x & 1 or V >> x & 1 for x in obj.data)
        if k == "relational":
            s = self.sig.get(sym)
            comp = obj.component(sym)
            iso = [i for i, t in enumerate(s.tonicity) if t != "anti"]
            anti = [i for i, t in enumerate(s.tonicity) if t == "anti"]
            if s.law == "meet-law":
                return all(not all(sets[j] >> a[j] & 1 for j in anti) or all(sets[i] >> a[i] & 1 for i in iso)
                           for a in comp)
            return any(all(sets[i] >> a[i] & 1 for i in iso) and not any(sets[j] >> a[j] & 1 for j in anti)
                       for a in comp)
        raise CoalcanError("MISSING-INTERPRETATION", f"{self.name} has no clause for {sym}")

    def _nabla(self, kind, sets, obj):
        if kind == "set":
            if obj.kind != "set":
                return False
            S = obj.data
            return (all(any(A >> x & 1 for A in sets) for x in S)
                    and all(any(A >> x & 1 for x in S) for A in sets))
        if obj.kind != "tup" or len(obj.data) != len(sets):
            return False
        return all(A >> x & 1 for A, x in zip(sets, obj.data))

    def check_generator(self, node, n):
        if self.kind == "gml" and node[0] == "app":
            N = self.functor.N
            if _grade(node[1]) > N * n:
                raise CoalcanError("GRADE-OVERFLOW",
                                   f"grade {_grade(node[1])} exceeds {N}*{n} on this carrier")


def classical_logic(finite=True):
    return Logic("classical", Powerset(finite), classical_sig(), "classical")


def gml_logic(N, grades=None):
    name = f"gml:{N}" if grades is None else f"gml:{N}:{grades}"
    return Logic(name, Bag(N), gml_sig(grades or N), "gml")


def nabla_logic(functor):
    kind = "set" if isinstance(functor, Powerset) else "tup"
    name = "nabla-set" if kind == "set" else f"nabla-tup:{functor.n}" + ("*" if functor.star else "")
    return Logic(name, functor, nabla_sig(kind), "nabla")


def tree_logic(n, omega=False, star=False):
    name = f"tree-omega:{n}" + ("*" if star else "") if omega else f"tree:{n}"
    return Logic(name, Tree(n, omega, star), tree_sig(n), "tree")


def relational_logic(sig):
    return Logic(f"relational:{sig.name}", ConvexRel(sig), sig, "relational", poset_carrier=True)


def intuitionistic_logic():
    return Logic("intuitionistic", Powerset(True), heyting_sig(), "intuitionistic", poset_carrier=True)


def logic_from_name(spec):
    """classical | gml:N[:G] | nabla-set | nabla-tup:d | tree:n | tree-omega:d[*]
    | relational:<builtin sig> | intuitionistic"""
    from .termlang import BUILTIN_SIGS
    parts = spec.split(":")
    head = parts[0]
    try:
        if head == "classical":
            return classical_logic()
        if head == "gml":
            N = int(parts[1]) if len(parts) > 1 else 3
            G = int(parts[2]) if len(parts) > 2 else None
            return gml_logic(N, G)
        if head == "nabla-set":
            return nabla_logic(Powerset(True))
        if head == "nabla-tup":
            d = parts[1] if len(parts) > 1 else "3"
            star = d.endswith("*")
            return nabla_logic(Tree(int(d.rstrip("*")), omega=True, star=star))
        if head == "tree":
            return tree_logic(int(parts[1]))
        if head == "tree-omega":
            d = parts[1]
            return tree_logic(int(d.rstrip("*")), omega=True, star=d.endswith("*"))
        if head == "relational":
            return relational_logic(BUILTIN_SIGS[parts[1]]())
        if head == "intuitionistic":
            return intuitionistic_logic()
    except (IndexError, ValueError, KeyError):
        pass
    raise CoalcanError("INPUT-ERROR", f"unknown logic {spec!r}")


def delta(logic, X, gen, poset=None):
    """delta_X on a generator: the functor objects over X satisfying it.

    ``gen`` is ``(symbol, [subsets])`` or ``("nabla", kind, [subsets])``.
    """
    X = list(X)
    pos = {x: i for i, x in enumerate(X)}

    def mask(U):
        m = 0
        for u in U:
            m |= 1 << pos[u]
        return m

    if gen[0] == "nabla":
        node = ("nabla", gen[1], ())
        sets = [mask(U) for U in gen[2]]
    else:
        node = ("app", gen[0], ())
        sets = [mask(U) for U in gen[1]]
        logic.check_generator(node, len(X))
    idx_poset = poset
    out = set()
    for obj in logic.functor.objects(range(len(X)), idx_poset):
        if logic.step(node, sets, obj):
            out.add(rename(obj, lambda i: X[i]))
    return frozenset(out)


# ---------------------------------------------------------------- coalgebras

class Coalgebra:
    """Finite coalgebra with optional poset carrier and valuation."""

    def __init__(self, carrier, gamma, val=None, poset=None, logic=None, functor=None):
        self.carrier = list(carrier)
        self.pos = {x: i for i, x in enumerate(self.carrier)}
        if len(self.pos) != len(self.carrier):
            raise CoalcanError("INPUT-ERROR", "duplicate carrier element")
        self.poset = poset
        self.logic = logic
        self.functor = functor or (logic.functor if logic else None)
        self.gamma = [None] * len(self.carrier)
        for x, obj in dict(gamma).items():
            self.gamma[self.pos[x]] = obj
        if any(g is None for g in self.gamma):
            missing = [self.carrier[i] for i, g in enumerate(self.gamma) if g is None]
            raise CoalcanError("INPUT-ERROR", f"gamma undefined at {missing[0]}")
        self.val = {p: self.mask(U) for p, U in (val or {}).items()}
        self.warnings = []
        if self.functor is not None:
            for g in self.gamma:
                self.functor.validate(g, len(self.carrier))
        if poset is not None:
            for p, m in self.val.items():
                if not self.is_upset(m):
                    raise CoalcanError("INPUT-ERROR", f"valuation of {p} is not an up-set")
            if isinstance(self.functor, ConvexRel):
                self._normalize_convex()

    @property
    def n(self):
        return len(self.carrier)

    @property
    def full(self):
        return (1 << self.n) - 1

    def mask(self, U):
        m = 0
        for u in U:
            if u not in self.pos:
                raise CoalcanError("INPUT-ERROR", f"unknown carrier element {u!r}")
            m |= 1 << self.pos[u]
        return m

    def subset(self, m):
        return frozenset(self.carrier[i] for i in range(self.n) if m >> i & 1)

    def is_upset(self, m):
        P = self.poset
        return all(not (m >> i & 1) or m >> j & 1 for i in range(self.n) for j in range(self.n) if P.le(i, j))

    def upsets(self):
        if self.poset is None:
            return list(range(1 << self.n))
        return [m for m in range(1 << self.n) if self.is_upset(m)]

    def _normalize_convex(self):
        F = self.functor
        tons = {s: ton for s, _, ton in F.symbols}
        for i, g in enumerate(self.gamma):
            closed = frel({s: convex_closure(c, self.poset, tons[s]) for s, c in g.data})
            if closed != g:
                self.warnings.append(f"gamma({self.carrier[i]}) replaced by its convex closure")
                self.gamma[i] = closed
        for i in range(self.n):
            for j in range(self.n):
                if self.poset.le(i, j) and not F.le(self.gamma[i], self.gamma[j], self.poset):
                    self.warnings.append(
                        f"gamma not Egli-Milner monotone at {self.carrier[i]} <= {self.carrier[j]}")

    def with_valuation(self, val):
        M = Coalgebra.__new__(Coalgebra)
        M.__dict__.update(self.__dict__)
        M.val = {p: (v if isinstance(v, int) else self.mask(v)) for p, v in val.items()}
        return M


def _eval_mask(M, t, env, logic, cache):
    tag = t[0]
    if tag == "var":
        if t[1] not in env:
            raise CoalcanError("MISSING-INTERPRETATION", f"no valuation for {t[1]}")
        return env[t[1]]
    if tag == "top":
        return M.full
    if tag == "bot":
        return 0
    if tag == "not":
        return M.full & ~_eval_mask(M, t[1], env, logic, cache)
    if tag == "and":
        return _eval_mask(M, t[1], env, logic, cache) & _eval_mask(M, t[2], env, logic, cache)
    if tag == "or":
        return _eval_mask(M, t[1], env, logic, cache) | _eval_mask(M, t[2], env, logic, cache)
    if tag in ("app", "nabla"):
        sets = tuple(_eval_mask(M, a, env, logic, cache) for a in t[2])
        return _modal(M, t, sets, logic, cache)
    raise CoalcanError("INPUT-ERROR", f"not a term: {t!r}")


def _modal(M, t, sets, logic, cache):
    node = ("nabla", t[1], ()) if t[0] == "nabla" else ("app", t[1], ())
    key = (node, sets)
    r = cache.get(key)
    if r is None:
        r = 0
        for i, g in enumerate(M.gamma):
            if logic.step(node, sets, g):
                r |= 1 << i
        cache[key] = r
    return r


def eval_term(M, t, logic=None):
    """Extension of t in M as a frozenset of carrier elements."""
    logic = logic or M.logic
    return M.subset(_eval_mask(M, t, M.val, logic, {}))


def _eval_vec(M, t, env, logic, cache, memo):
    """Vectorized over valuations: env maps variables to int64 arrays."""
    if t in memo:
        return memo[t]
    tag = t[0]
    size = len(next(iter(env.values()))) if env else 1
    if tag == "var":
        r = env[t[1]]
    elif tag == "top":
        r = np.full(size, M.full, dtype=np.int64)
    elif tag == "bot":
        r = np.zeros(size, dtype=np.int64)
    elif tag == "not":
        r = M.full & ~_eval_vec(M, t[1], env, logic, cache, memo)
    elif tag == "and":
        r = _eval_vec(M, t[1], env, logic, cache, memo) & _eval_vec(M, t[2], env, logic, cache, memo)
    elif tag == "or":
        r = _eval_vec(M, t[1], env, logic, cache, memo) | _eval_vec(M, t[2], env, logic, cache, memo)
    elif tag in ("app", "nabla"):
        args = [np.broadcast_to(_eval_vec(M, a, env, logic, cache, memo), (size,)) for a in t[2]]
        if not args:
            r = np.full(size, _modal(M, t, (), logic, cache), dtype=np.int64)
        else:
            stack = np.stack(args, axis=1)
            uniq, inv = np.unique(stack, axis=0, return_inverse=True)
            vals = np.array([_modal(M, t, tuple(int(v) for v in row), logic, cache) for row in uniq],
                            dtype=np.int64)
            r = vals[inv.reshape(-1)]
    else:
        raise CoalcanError("INPUT-ERROR", f"not a term: {t!r}")
    memo[t] = r
    return r


DEFAULT_BUDGET = 2_000_000


def budget_from_env(default=DEFAULT_BUDGET):
    import os
    v = os.environ.get("COALCAN_BUDGET")
    if v:
        try:
            return int(v)
        except ValueError:
            raise CoalcanError("INPUT-ERROR", f"COALCAN_BUDGET is not an integer: {v!r}")
    return default


class FrameVerdict:
    def __init__(self, valid, countervaluation=None, checked=0):
        self.valid = valid
        self.countervaluation = countervaluation
        self.checked = checked

    def __bool__(self):
        return self.valid

    def __repr__(self):
        return f"FrameVerdict({self.valid})"


def frame_valid(frame, eq, vs=None, logic=None, budget=None):
    """Exhaustive check of an equation over all (up-set) valuations."""
    logic = logic or frame.logic
    if not isinstance(eq, Equation):
        eq = Equation(eq, "=", ("top",))
    vs = sorted(variables(eq.lhs) | variables(eq.rhs)) if vs is None else list(vs)
    choices = np.array(frame.upsets(), dtype=np.int64)
    total = len(choices) ** len(vs)
    budget = budget_from_env() if budget is None else budget
    if total > budget:
        raise CoalcanError("BUDGET-EXCEEDED", f"{total} valuations exceed the budget {budget}")
    if vs:
        grids = np.meshgrid(*([choices] * len(vs)), indexing="ij")
        env = {v: g.reshape(-1) for v, g in zip(vs, grids)}
    else:
        env = {}
    cache, memo = {}, {}
    a = np.broadcast_to(_eval_vec(frame, eq.lhs, env, logic, cache, memo), (total,))
    b = np.broadcast_to(_eval_vec(frame, eq.rhs, env, logic, cache, memo), (total,))
    bad = (a != b) if eq.rel == "=" else (a & ~b) != 0
    idx = np.flatnonzero(bad)
    if len(idx) == 0:
        return FrameVerdict(True, None, total)
    k = int(idx[0])
    cv = {v: frame.subset(int(env[v][k])) for v in vs}
    return FrameVerdict(False, cv, total)


def satisfied_at(M, t, x, logic=None):
    return x in eval_term(M, t, logic)


# --------------------------------------------------------------- text format

def parse_coalg(text, logic=None):
    """``.coalg`` text: optional ``logic`` / ``functor`` lines, ``carrier``
    lines, ``le a b`` lines, ``gamma x := <literal>``, ``val p := {..}``."""
    carrier, les, gam, val = [], [], [], {}
    logic_name = functor_name = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0]
        if head == "carrier":
            carrier.extend(re.split(r"[\s,]+", line[len("carrier"):].strip()))
        elif head == "le":
            toks = line.split()
            if len(toks) != 3:
                raise CoalcanError("PARSE-ERROR", f"line {no}: le needs two elements")
            les.append((toks[1], toks[2]))
        elif head == "logic":
            logic_name = line.split()[1]
        elif head == "functor":
            functor_name = line.split()[1]
        elif head in ("gamma", "val"):
            m = re.fullmatch(r"(gamma|val)\s+(\S+)\s*:=\s*(.+)", line)
            if not m:
                raise CoalcanError("PARSE-ERROR", f"line {no}: expected '{head} <name> := ...'")
            if head == "gamma":
                gam.append((m.group(2), m.group(3)))
            else:
                body = m.group(3).strip()
                if not (body.startswith("{") and body.endswith("}")):
                    raise CoalcanError("PARSE-ERROR", f"line {no}: valuation must be a set")
                val[m.group(2)] = [x.strip() for x in body[1:-1].split(",") if x.strip()]
        else:
            raise CoalcanError("PARSE-ERROR", f"line {no}: unknown directive {head!r}")
    carrier = [c for c in carrier if c]
    if not carrier:
        raise CoalcanError("PARSE-ERROR", "no carrier")
    if logic is None and logic_name:
        logic = logic_from_name(logic_name)
    elem = {x: i for i, x in enumerate(carrier)}
    poset = None
    if les or (logic is not None and logic.poset_carrier):
        from .lattice import FinPoset
        for a, b in les:
            if a not in elem or b not in elem:
                raise CoalcanError("PARSE-ERROR", f"le mentions unknown element {a if a not in elem else b}")
        poset = FinPoset.from_pairs(list(range(len(carrier))), [(elem[a], elem[b]) for a, b in les])
    rel_syms = None
    if logic is not None and isinstance(logic.functor, ConvexRel):
        rel_syms = logic.functor.arities()
    gamma = {}
    for x, lit in gam:
        if x not in elem:
            raise CoalcanError("PARSE-ERROR", f"gamma for unknown element {x}")
        gamma[x] = rename(parse_obj(lit, elem, rel_syms), lambda i: i)
    functor = functor_from_name(functor_name, logic.sig if logic else None) if functor_name else None
    if logic is None:
        logic = _guess_logic(gamma.values())
    if functor is None:
        functor = logic.functor
    val = {p: [elem[u] if u in elem else _bad(u) for u in U] for p, U in val.items()}
    return Coalgebra(range(len(carrier)), gamma={elem[x]: g for x, g in gamma.items()},
                     val=val, poset=poset, logic=logic, functor=functor).renamed(carrier)


def _bad(u):
    raise CoalcanError("PARSE-ERROR", f"valuation mentions unknown element {u}")


def _guess_logic(objs):
    kinds = {o.kind for o in objs}
    if kinds <= {"set"}:
        return classical_logic()
    if kinds <= {"bag"}:
        N = max([m for o in objs for _, m in o.data] + [1])
        return gml_logic(N)
    if kinds <= {"tup", "star"}:
        d = max([len(o.data) for o in objs if o.kind == "tup"] + [0])
        return tree_logic(max(d, 1), omega=True, star="star" in kinds)
    raise CoalcanError("INPUT-ERROR", "cannot infer the logic; add a 'logic' line")


def _renamed(self, names):
    """Same coalgebra with index carrier replaced by names (payloads stay as
    indices internally)."""
    self.carrier = list(names)
    self.pos = {x: i for i, x in enumerate(self.carrier)}
    return self


Coalgebra.renamed = _renamed


def format_coalg(M, logic_name=None):
    out = []
    if logic_name or M.logic:
        out.append(f"logic {logic_name or M.logic.name}")
    out.append("carrier " + " ".join(str(x) for x in M.carrier))
    if M.poset is not None:
        for i in range(M.n):
            for j in range(M.n):
                if i != j and M.poset.le(i, j):
                    out.append(f"le {M.carrier[i]} {M.carrier[j]}")
    for i, g in enumerate(M.gamma):
        out.append(f"gamma {M.carrier[i]} := {format_obj(g, lambda k: str(M.carrier[k]))}")
    for p in sorted(M.val):
        out.append(f"val {p} := " + "{" + ",".join(str(x) for x in sorted(M.subset(M.val[p]), key=str)) + "}")
    return "\n".join(out) + "\n"


def kripke(succ, val=None, logic=None):
    """Convenience: a Pw-coalgebra from a successor dict."""
    carrier = list(succ)
    pos = {x: i for i, x in enumerate(carrier)}
    gamma = {pos[x]: fset(pos[y] for y in ys) for x, ys in succ.items()}
    val = {p: [pos[u] for u in U] for p, U in (val or {}).items()}
    return Coalgebra(range(len(carrier)), gamma, val, logic=logic or classical_logic()).renamed(carrier)


def all_kripke_frames(n, logic=None):
    """Every Pw-frame on n states (2^(n*n) of them)."""
    for bits in range(1 << (n * n)):
        succ = {i: [j for j in range(n) if bits >> (i * n + j) & 1] for i in range(n)}
        yield kripke(succ, logic=logic)


# ------------------------------------------------- terminal-sequence semantics

class TerminalSequence:
    """Stages T_V^k(1) = Q(V) x F(stage k-1), stage 0 = Q(V)."""

    def __init__(self, logic, n, vs, stages):
        self.logic = logic
        self.n = n
        self.vs = list(vs)
        self.stages = stages          # list of lists of (colour, obj or None)
        self.delta_injective = []

    def denote(self, t, k=None):
        k = self.n if k is None else k
        return frozenset(self._den(t, k))

    def _den(self, t, k):
        stage = self.stages[k]
        tag = t[0]
        full = set(range(len(stage)))
        if tag == "var":
            return {i for i, (c, _) in enumerate(stage) if t[1] in c}
        if tag == "top":
            return full
        if tag == "bot":
            return set()
        if tag == "not":
            return full - self._den(t[1], k)
        if tag == "and":
            return self._den(t[1], k) & self._den(t[2], k)
        if tag == "or":
            return self._den(t[1], k) | self._den(t[2], k)
        if tag in ("app", "nabla"):
            if k == 0:
                raise CoalcanError("INPUT-ERROR", f"modal depth exceeds the stage in {show(t)}")
            sets = []
            for a in t[2]:
                m = 0
                for i in self._den(a, k - 1):
                    m |= 1 << i
                sets.append(m)
            node = ("nabla", t[1], ()) if tag == "nabla" else ("app", t[1], ())
            return {i for i, (_, obj) in enumerate(stage) if self.logic.step(node, sets, obj)}
        raise CoalcanError("INPUT-ERROR", f"not a term: {t!r}")

    def table(self, terms):
        return {show(t): self.denote(t) for t in terms}


def terminal_sequence_interp(logic, n, vs, budget=None, check_injective=True):
    budget = budget_from_env() if budget is None else budget
    vs = sorted(vs)
    colours = [frozenset(c) for c in _subsets(vs)]
    colours.sort(key=lambda c: (len(c), sorted(c)))
    stages = [[(c, None) for c in colours]]
    for k in range(1, n + 1):
        prev = len(stages[-1])
        objs = logic.functor.objects(range(prev))
        if len(objs) * len(colours) > budget:
            raise CoalcanError("BUDGET-EXCEEDED", f"stage {k} has {len(objs) * len(colours)} points")
        stages.append([(c, o) for c in colours for o in objs])
    seq = TerminalSequence(logic, n, vs, stages)
    if check_injective:
        from .canmodel import delta_injective
        for k in range(n):
            seq.delta_injective.append(delta_injective(logic, len(stages[k])))
    return seq
