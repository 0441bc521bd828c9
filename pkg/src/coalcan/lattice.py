"""Finite posets, distributive lattices and boolean algebras.

Elements are opaque hashable ids; internally every structure works with
integer indices 0..n-1.  Small lattices carry explicit numpy meet/join
tables.  Powerset boolean algebras (free algebras, downset algebras of
antichains) use bitmask arithmetic instead, because at four generators the
free algebra already has 65536 elements.

Duality convention: the dual of a lattice is its poset of prime filters
ordered by *reverse* inclusion, and a lattice is recovered as the *downsets*
of that poset.
"""

from itertools import combinations

import networkx as nx
import numpy as np

from .errors import CoalcanError

KINDS = ("DL", "BDL", "BA")


# ---------------------------------------------------------------- posets

class FinPoset:
    """A finite poset with an explicit boolean order matrix."""

    def __init__(self, elements, leq):
        self.elements = tuple(elements)
        if len(set(self.elements)) != len(self.elements):
            raise CoalcanError("INPUT-ERROR", "poset elements are not distinct")
        self.index = {e: i for i, e in enumerate(self.elements)}
        self.leq = np.asarray(leq, dtype=bool).reshape(len(self.elements), len(self.elements))
        self._check()

    def _check(self):
        m = self.leq
        n = len(self.elements)
        if n == 0:
            return
        if not m.diagonal().all():
            raise CoalcanError("INPUT-ERROR", "order is not reflexive")
        if (m & m.T & ~np.eye(n, dtype=bool)).any():
            raise CoalcanError("INPUT-ERROR", "order is not antisymmetric")
        comp = (m.astype(np.int32) @ m.astype(np.int32)) > 0
        if (comp & ~m).any():
            raise CoalcanError("INPUT-ERROR", "order is not transitive")

    @classmethod
    def from_pairs(cls, elements, pairs):
        """Build from generating pairs (x, y) meaning x <= y; closes transitively."""
        elements = list(elements)
        idx = {e: i for i, e in enumerate(elements)}
        n = len(elements)
        m = np.eye(n, dtype=bool)
        for a, b in pairs:
            m[idx[a], idx[b]] = True
        # Warshall
        for k in range(n):
            m |= np.outer(m[:, k], m[k, :])
        return cls(elements, m)

    @classmethod
    def discrete(cls, elements):
        elements = list(elements)
        return cls(elements, np.eye(len(elements), dtype=bool))

    def __len__(self):
        return len(self.elements)

    def le(self, a, b):
        return bool(self.leq[self.index[a], self.index[b]])

    def up(self, a):
        i = self.index[a]
        return frozenset(self.elements[j] for j in np.flatnonzero(self.leq[i]))

    def down(self, a):
        i = self.index[a]
        return frozenset(self.elements[j] for j in np.flatnonzero(self.leq[:, i]))

    def is_downset(self, s):
        return all(self.down(x) <= s for x in s)

    def is_upset(self, s):
        return all(self.up(x) <= s for x in s)

    def downsets(self):
        """All down-closed subsets, enumerated by recursion on a linear extension."""
        order = self.linear_extension()
        out = []

        def rec(i, cur):
            if i == len(order):
                out.append(frozenset(cur))
                return
            x = order[i]
            rec(i + 1, cur)
            # x may join only if everything strictly below it is already in
            if all(y in cur for y in self.down(x) if y != x):
                cur.add(x)
                rec(i + 1, cur)
                cur.discard(x)

        rec(0, set())
        return sorted(out, key=lambda s: (len(s), sorted(map(self.index.get, s))))

    def upsets(self):
        full = frozenset(self.elements)
        return [full - d for d in self.downsets()]

    def linear_extension(self):
        n = len(self.elements)
        below = self.leq.sum(axis=0)
        return [self.elements[i] for i in sorted(range(n), key=lambda i: (below[i], i))]

    def covers(self):
        out = []
        n = len(self.elements)
        for i in range(n):
            for j in range(n):
                if i != j and self.leq[i, j]:
                    if not any(k not in (i, j) and self.leq[i, k] and self.leq[k, j] for k in range(n)):
                        out.append((self.elements[i], self.elements[j]))
        return out

    def dual(self):
        return FinPoset(self.elements, self.leq.T.copy())

    def graph(self):
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.elements)))
        n = len(self.elements)
        g.add_edges_from((i, j) for i in range(n) for j in range(n) if i != j and self.leq[i, j])
        return g

    def isomorphism(self, other):
        """An order isomorphism as a dict, or None."""
        if len(self) != len(other):
            return None
        gm = nx.algorithms.isomorphism.DiGraphMatcher(self.graph(), other.graph())
        for m in gm.isomorphisms_iter():
            return {self.elements[i]: other.elements[j] for i, j in m.items()}
        return None

    def is_isomorphic(self, other):
        return self.isomorphism(other) is not None


# --------------------------------------------------------------- lattices

class FinLattice:
    """Finite distributive lattice (DL, BDL) or boolean algebra (BA).

    Subclasses provide meet/join/le on indices.  ``kind`` only affects which
    constants and operations are part of the signature; a finite lattice
    always has a least and greatest element.
    """

    kind = "BDL"
    elements = ()

    # index-level operations, overridden
    def meet(self, i, j):
        raise NotImplementedError

    def join(self, i, j):
        raise NotImplementedError

    def le(self, i, j):
        return self.meet(i, j) == i

    def neg(self, i):
        if self._neg is None:
            raise CoalcanError("INPUT-ERROR", "lattice has no complement")
        return self._neg[i]

    @property
    def n(self):
        return len(self.elements)

    def __len__(self):
        return self.n

    def id(self, i):
        return self.elements[i]

    def idx(self, e):
        return self.index[e]

    @property
    def bot(self):
        return self._bot

    @property
    def top(self):
        return self._top

    def has_neg(self):
        return self._neg is not None

    def bigmeet(self, idxs):
        r = self.top
        for i in idxs:
            r = self.meet(r, i)
        return r

    def bigjoin(self, idxs):
        r = self.bot
        for i in idxs:
            r = self.join(r, i)
        return r

    def upset(self, i):
        return frozenset(j for j in range(self.n) if self.le(i, j))

    def downset(self, i):
        return frozenset(j for j in range(self.n) if self.le(j, i))

    def order(self):
        """The underlying FinPoset on element ids."""
        n = self.n
        m = np.array([[self.le(i, j) for j in range(n)] for i in range(n)], dtype=bool)
        return FinPoset(self.elements, m)

    # tables (materialized on demand, for small hosts)
    def tables(self):
        if getattr(self, "_tables", None) is None:
            n = self.n
            if n > 4096:
                raise CoalcanError("CAP-EXCEEDED", f"lattice too large for explicit tables ({n})")
            mt = np.empty((n, n), dtype=np.int32)
            jt = np.empty((n, n), dtype=np.int32)
            for i in range(n):
                for j in range(n):
                    mt[i, j] = self.meet(i, j)
                    jt[i, j] = self.join(i, j)
            lt = mt == np.arange(n)[:, None]
            ng = None if self._neg is None else np.asarray(self._neg, dtype=np.int32)
            self._tables = (mt, jt, lt, ng)
        return self._tables

    def atoms(self):
        return [i for i in range(self.n) if i != self.bot
                and all(j in (self.bot, i) for j in range(self.n) if self.le(j, i))]

    def join_irreducibles(self):
        """Nonzero elements that are not the join of two strictly smaller ones."""
        out = []
        for i in range(self.n):
            if i == self.bot:
                continue
            below = [j for j in range(self.n) if j != i and self.le(j, i)]
            if self.bigjoin(below) != i:
                out.append(i)
        return out

    def is_distributive(self):
        mt, jt, _, _ = self.tables()
        n = self.n
        a = np.arange(n)
        for x in range(n):
            lhs = mt[x][jt]                     # x ∧ (y ∨ z)
            rhs = jt[mt[x][:, None], mt[x][None, :]]
            if not np.array_equal(lhs, rhs):
                return False
        return True

    def describe(self):
        return f"{self.kind} lattice with {self.n} elements"


class TableLattice(FinLattice):
    """Lattice with explicit meet/join tables computed from an order."""

    def __init__(self, kind, elements, leq, neg=None, check=True):
        if kind not in KINDS:
            raise CoalcanError("INPUT-ERROR", f"unknown lattice kind {kind}")
        self.kind = kind
        self.elements = tuple(elements)
        self.index = {e: i for i, e in enumerate(self.elements)}
        n = len(self.elements)
        if n == 0:
            raise CoalcanError("INPUT-ERROR", "a lattice needs at least one element")
        leq = np.asarray(leq, dtype=bool).reshape(n, n)
        FinPoset(self.elements, leq)  # validates the order
        mt = np.empty((n, n), dtype=np.int32)
        jt = np.empty((n, n), dtype=np.int32)
        for i in range(n):
            for j in range(i, n):
                lower = np.flatnonzero(leq[:, i] & leq[:, j])
                upper = np.flatnonzero(leq[i] & leq[j])
                g = [x for x in lower if leq[lower, x].all()]
                l = [x for x in upper if leq[x, upper].all()]
                if len(g) != 1 or len(l) != 1:
                    raise CoalcanError("INPUT-ERROR", "order is not a lattice")
                mt[i, j] = mt[j, i] = g[0]
                jt[i, j] = jt[j, i] = l[0]
        self._mt, self._jt, self._lt = mt, jt, leq
        self._bot = int(np.flatnonzero(leq.all(axis=1))[0])
        self._top = int(np.flatnonzero(leq.all(axis=0))[0])
        if kind == "BA" and neg is None:
            neg = self._complements()
        self._neg = None if neg is None else [int(x) for x in neg]
        self._tables = (mt, jt, leq, None if self._neg is None else np.asarray(self._neg, dtype=np.int32))
        if check:
            if not self.is_distributive():
                raise CoalcanError("NON-DISTRIBUTIVE", "lattice is not distributive")
            if kind == "BA":
                for i in range(n):
                    c = self._neg[i]
                    if mt[i, c] != self._bot or jt[i, c] != self._top:
                        raise CoalcanError("INPUT-ERROR", "negation table is not a complement")

    def _complements(self):
        n = len(self.elements)
        out = []
        for i in range(n):
            cs = [j for j in range(n) if self._mt[i, j] == self._bot and self._jt[i, j] == self._top]
            if not cs:
                raise CoalcanError("INPUT-ERROR", "BA kind requested but an element has no complement")
            out.append(cs[0])
        return out

    def meet(self, i, j):
        return int(self._mt[i, j])

    def join(self, i, j):
        return int(self._jt[i, j])

    def le(self, i, j):
        return bool(self._lt[i, j])


class PowersetBA(FinLattice):
    """The powerset of a finite set of atoms, as bitmasks.

    Element index ``i`` is the bitmask of the subset; its id is the frozenset
    of atom ids (computed lazily).
    """

    kind = "BA"

    def __init__(self, atoms, kind="BA"):
        self.atom_ids = tuple(atoms)
        self.m = len(self.atom_ids)
        self.kind = kind
        self._bot = 0
        self._top = (1 << self.m) - 1
        self._neg = _LazyNeg(self._top)
        self._elements = None

    @property
    def n(self):
        return 1 << self.m

    @property
    def elements(self):
        if self._elements is None:
            self._elements = _LazyIds(self)
        return self._elements

    @property
    def index(self):
        return _LazyIndex(self)

    def subset(self, i):
        return frozenset(self.atom_ids[k] for k in range(self.m) if i >> k & 1)

    def mask(self, s):
        pos = {a: k for k, a in enumerate(self.atom_ids)}
        r = 0
        for a in s:
            r |= 1 << pos[a]
        return r

    def meet(self, i, j):
        return i & j

    def join(self, i, j):
        return i | j

    def le(self, i, j):
        return i & ~j == 0

    def neg(self, i):
        return self._top & ~i

    def atoms(self):
        return [1 << k for k in range(self.m)]

    def join_irreducibles(self):
        return self.atoms()

    def is_distributive(self):
        return True

    def tables(self):
        if getattr(self, "_tables", None) is None:
            n = self.n
            if n > 4096:
                raise CoalcanError("CAP-EXCEEDED", f"lattice too large for explicit tables ({n})")
            a = np.arange(n, dtype=np.int32)
            mt = a[:, None] & a[None, :]
            jt = a[:, None] | a[None, :]
            lt = (a[:, None] & ~a[None, :]) == 0
            self._tables = (mt, jt, lt, self._top & ~a)
        return self._tables


class _LazyNeg:
    def __init__(self, top):
        self.top = top

    def __getitem__(self, i):
        return self.top & ~i


class _LazyIds:
    def __init__(self, ba):
        self.ba = ba

    def __len__(self):
        return self.ba.n

    def __getitem__(self, i):
        if i < 0 or i >= self.ba.n:
            raise IndexError(i)
        return self.ba.subset(i)

    def __iter__(self):
        return (self.ba.subset(i) for i in range(self.ba.n))


class _LazyIndex:
    def __init__(self, ba):
        self.ba = ba

    def __getitem__(self, e):
        return self.ba.mask(e)

    def get(self, e, default=None):
        try:
            return self.ba.mask(e)
        except KeyError:
            return default

    def __contains__(self, e):
        return all(a in self.ba.atom_ids for a in e)


def chain(n, kind="BDL"):
    """The n-element chain 0 < 1 < ... < n-1."""
    leq = np.array([[i <= j for j in range(n)] for i in range(n)], dtype=bool)
    if kind == "BA" and n > 2:
        raise CoalcanError("INPUT-ERROR", "a chain with more than 2 elements is not boolean")
    return TableLattice(kind, list(range(n)), leq)


def powerset_ba(points):
    return PowersetBA(list(points))


# ---------------------------------------------------------------- filters

class FilterLike:
    def __init__(self, host, members, flavor):
        self.host = host
        self.members = frozenset(members)
        self.flavor = flavor

    def __contains__(self, i):
        return i in self.members

    def __eq__(self, other):
        return isinstance(other, FilterLike) and self.members == other.members and self.host is other.host

    def __hash__(self):
        return hash(self.members)

    def __repr__(self):
        return f"FilterLike({self.flavor}, {sorted(self.members)})"

    def ids(self):
        return frozenset(self.host.id(i) for i in self.members)


def is_filter(A, s):
    s = set(s)
    if not s:
        return False
    for i in s:
        if not A.upset(i) <= s:
            return False
    return all(A.meet(i, j) in s for i in s for j in s)


def is_ideal(A, s):
    s = set(s)
    if not s:
        return False
    for i in s:
        if not A.downset(i) <= s:
            return False
    return all(A.join(i, j) in s for i in s for j in s)


def is_prime_filter(A, s):
    s = set(s)
    if not is_filter(A, s) or len(s) == A.n:
        return False
    return all(i in s or j in s for i in range(A.n) for j in range(A.n) if A.join(i, j) in s)


def principal_filter(A, i, flavor="filter"):
    return FilterLike(A, A.upset(i), flavor)


def principal_ideal(A, i):
    return FilterLike(A, A.downset(i), "ideal")


def prime_filters(A):
    """Proper prime filters of a finite DL: the principal filters of its
    join-irreducibles.  Returned as (poset under reverse inclusion, filters)."""
    flavor = "ultrafilter" if A.kind == "BA" else "prime-filter"
    fs = [FilterLike(A, A.upset(j), flavor) for j in A.join_irreducibles()]
    fs.sort(key=lambda f: (-len(f.members), sorted(f.members)))
    names = [f"F{k}" for k in range(len(fs))]
    leq = np.array([[f.members >= g.members for g in fs] for f in fs], dtype=bool).reshape(len(fs), len(fs))
    return FinPoset(names, leq), fs


def prime_filters_bruteforce(A):
    """Oracle: test every subset of the carrier."""
    out = []
    for r in range(1, A.n + 1):
        for s in combinations(range(A.n), r):
            if is_prime_filter(A, s):
                out.append(frozenset(s))
    return out


# ---------------------------------------------------------------- duality

def downset_lattice(P):
    """Bounded DL of the downsets of P ordered by inclusion."""
    ds = P.downsets()
    n = len(ds)
    leq = np.array([[a <= b for b in ds] for a in ds], dtype=bool).reshape(n, n)
    kind = "BDL"
    return TableLattice(kind, ds, leq)


class DualityWitness:
    def __init__(self, algebra, dual, filters, eta, ji_to_filter):
        self.algebra = algebra
        self.dual = dual
        self.filters = filters
        self.eta = eta
        self.ji_to_filter = ji_to_filter

    def report(self):
        return {
            "ALGEBRA": self.algebra.describe(),
            "PRIME-FILTERS": len(self.filters),
            "DUAL-COVERS": len(self.dual.covers()),
            "ETA-ISO": "yes",
        }


def birkhoff_roundtrip(A):
    """eta(a) = {p : a in p}; checks it is a lattice isomorphism onto the
    downsets of the prime-filter poset."""
    dual, fs = prime_filters(A)
    names = dual.elements
    eta = []
    for a in range(A.n):
        eta.append(frozenset(names[k] for k, f in enumerate(fs) if a in f))
    down = set(dual.downsets())
    ok = len(set(eta)) == A.n and set(eta) == down
    if ok:
        for a in range(A.n):
            for b in range(A.n):
                if eta[A.meet(a, b)] != eta[a] & eta[b] or eta[A.join(a, b)] != eta[a] | eta[b]:
                    ok = False
                    break
            if not ok:
                break
    if ok and A.has_neg():
        full = frozenset(names)
        ok = all(eta[A.neg(a)] == full - eta[a] for a in range(A.n))
    if not ok:
        raise CoalcanError("NON-DISTRIBUTIVE", "eta is not an isomorphism onto the downset lattice")
    jis = A.join_irreducibles()
    ji = {}
    for j in jis:
        up = A.upset(j)
        ji[j] = next(names[k] for k, f in enumerate(fs) if f.members == up)
    return DualityWitness(A, dual, fs, eta, ji)


def order_dual_upsets(P):
    """The up-set convention, obtained by dualizing the poset first."""
    return downset_lattice(P.dual())


# ----------------------------------------------------- free and quotients

FREE_BA_CAP = 4


def free_ba(generators, cap=FREE_BA_CAP):
    """Free BA on the generators: subsets of the 2^n valuations.

    Returns (BA, embedding) where embedding maps each generator to the index
    of its truth set.  Valuation v (a bitmask over generators) is atom v.
    """
    gens = list(generators)
    if len(gens) > cap:
        raise CoalcanError("CAP-EXCEEDED", f"{len(gens)} generators exceed the cap {cap}")
    vals = [frozenset(g for k, g in enumerate(gens) if v >> k & 1) for v in range(1 << len(gens))]
    ba = PowersetBA(vals)
    emb = {}
    for k, g in enumerate(gens):
        m = 0
        for v in range(len(vals)):
            if v >> k & 1:
                m |= 1 << v
        emb[g] = m
    ba.generators = gens
    return ba, emb


def _congruence_closure(A, pairs):
    """Union-find closure under the lattice (and negation) operations."""
    parent = list(range(A.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    work = list(pairs)
    while work:
        a, b = work.pop()
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        parent[max(ra, rb)] = min(ra, rb)
        for c in range(A.n):
            work.append((A.meet(a, c), A.meet(b, c)))
            work.append((A.join(a, c), A.join(b, c)))
        if A.has_neg():
            work.append((A.neg(a), A.neg(b)))
    return [find(x) for x in range(A.n)]


def quotient_ba(A, pairs):
    """Quotient by the least congruence identifying each pair.

    Returns (quotient lattice, hom) with hom a list: index -> quotient index.
    On powerset BAs the congruence is the one of the filter generated by the
    biconditionals, so the quotient is the powerset of the surviving atoms.
    """
    pairs = [(int(a), int(b)) for a, b in pairs]
    if isinstance(A, PowersetBA):
        c = A.top
        for a, b in pairs:
            c &= A.top & ~(a ^ b)
        keep = [k for k in range(A.m) if c >> k & 1]
        Q = PowersetBA([A.atom_ids[k] for k in keep])
        if hasattr(A, "generators"):
            Q.generators = A.generators

        class _Hom:
            def __getitem__(self, i):
                r = 0
                for t, k in enumerate(keep):
                    if i >> k & 1:
                        r |= 1 << t
                return r

            def __len__(self):
                return A.n

            def __iter__(self):
                return (self[i] for i in range(A.n))

        return Q, _Hom()
    cls = _congruence_closure(A, pairs)
    reps = sorted(set(cls))
    pos = {r: k for k, r in enumerate(reps)}
    hom = [pos[c] for c in cls]
    m = len(reps)
    leq = np.zeros((m, m), dtype=bool)
    for a in range(A.n):
        for b in range(A.n):
            if A.le(a, b):
                leq[hom[a], hom[b]] = True
    neg = None
    if A.has_neg():
        neg = [hom[A.neg(r)] for r in reps]
    Q = TableLattice(A.kind, [A.id(r) for r in reps], leq, neg=neg)
    return Q, hom


def congruence_classes(A, pairs):
    """Generic closure, exposed as an oracle for the filter shortcut."""
    return _congruence_closure(A, [(int(a), int(b)) for a, b in pairs])


# ------------------------------------------------------------- text formats

def _lines(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line.split()


def parse_poset(text):
    elems, pairs = [], []
    for toks in _lines(text):
        if toks[0] == "elem" and len(toks) == 2:
            elems.append(toks[1])
        elif toks[0] == "le" and len(toks) == 3:
            pairs.append((toks[1], toks[2]))
        else:
            raise CoalcanError("PARSE-ERROR", f"bad .poset line: {' '.join(toks)}")
    for a, b in pairs:
        if a not in elems or b not in elems:
            raise CoalcanError("PARSE-ERROR", f"unknown element in le {a} {b}")
    return FinPoset.from_pairs(elems, pairs)


def parse_lat(text):
    kind, elems, pairs = None, [], []
    extra = {}
    negs = {}
    for toks in _lines(text):
        head = toks[0]
        if head == "kind" and len(toks) == 2:
            kind = toks[1]
        elif head == "elem" and len(toks) == 2:
            elems.append(toks[1])
        elif head == "le" and len(toks) == 3:
            pairs.append((toks[1], toks[2]))
        elif head in ("bot", "top") and len(toks) == 2:
            extra[head] = toks[1]
        elif head == "neg" and len(toks) == 3:
            negs[toks[1]] = toks[2]
        else:
            raise CoalcanError("PARSE-ERROR", f"bad .lat line: {' '.join(toks)}")
    if kind not in KINDS:
        raise CoalcanError("PARSE-ERROR", "missing or unknown kind line")
    for a, b in pairs:
        if a not in elems or b not in elems:
            raise CoalcanError("PARSE-ERROR", f"unknown element in le {a} {b}")
    P = FinPoset.from_pairs(elems, pairs)
    neg = None
    if negs:
        try:
            neg = [elems.index(negs[e]) for e in elems]
        except (KeyError, ValueError):
            raise CoalcanError("PARSE-ERROR", "neg lines must cover every element")
    L = TableLattice(kind, elems, P.leq, neg=neg)
    for k, v in extra.items():
        want = L.bot if k == "bot" else L.top
        if L.index.get(v) != want:
            raise CoalcanError("INPUT-ERROR", f"declared {k} {v} is not the {k} of the order")
    return L


def format_poset(P):
    lines = [f"elem {e}" for e in P.elements]
    lines += [f"le {a} {b}" for a, b in P.covers()]
    return "\n".join(lines) + "\n"


def format_lat(L, name=str):
    P = L.order()
    lines = [f"kind {L.kind}"]
    lines += [f"elem {name(e)}" for e in L.elements]
    lines += [f"le {name(a)} {name(b)}" for a, b in P.covers()]
    lines.append(f"bot {name(L.id(L.bot))}")
    lines.append(f"top {name(L.id(L.top))}")
    if L.has_neg():
        lines += [f"neg {name(L.id(i))} {name(L.id(L.neg(i)))}" for i in range(L.n)]
    return "\n".join(lines) + "\n"


def all_posets(n):
    """All partial orders on {0..n-1} up to isomorphism (brute force, n <= 4)."""
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    reps = []
    seen = []
    for mask in range(1 << len(pairs)):
        chosen = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
        m = np.eye(n, dtype=bool)
        for i, j in chosen:
            m[i, j] = True
        if (m & m.T & ~np.eye(n, dtype=bool)).any():
            continue
        if ((m.astype(int) @ m.astype(int) > 0) & ~m).any():
            continue
        P = FinPoset(list(range(n)), m)
        if any(P.is_isomorphic(Q) for Q in seen):
            continue
        seen.append(P)
        reps.append(P)
    return reps


def random_poset(n, rng, density=0.4):
    """Random poset: a random DAG on a fixed linear order, transitively closed."""
    m = np.eye(n, dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                m[i, j] = True
    for k in range(n):
        m |= np.outer(m[:, k], m[k, :])
    perm = rng.permutation(n)
    m = m[np.ix_(perm, perm)]
    return FinPoset(list(range(n)), m)
