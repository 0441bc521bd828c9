"""One-step algebras, the transpose delta-hat, explicit sections and the
Jonsson-Tarski frame on prime filters.

The one-step algebra L(A) of a finite host A is handled through its prime
filters only: these are the 0/1 valuations of the generator instances
``sym(a1..an)`` that satisfy every instance of the one-step axioms.  So
``Pf(L A)`` is an enumerable set of bit rows, computed with numpy for small
generator sets and with a SAT solver beyond that.
"""

from itertools import product

import numpy as np

from .coalg import (Bag, Coalgebra, ConvexRel, Powerset, STAR, Tree, _grade, classical_logic,
                    fbag, frel, fset, ftup, frame_valid, gml_logic, tree_logic, relational_logic,
                    eval_term)
from .errors import CoalcanError
from .lattice import FilterLike, PowersetBA, TableLattice, prime_filters
from .termlang import Equation, conj, disj, show, variables

INF = "inf"
NUMPY_VARS = 20


# ----------------------------------------------------- constraint formulas
# A formula is an int (generator), a bool, or ("and"|"or", [..]) / ("not", f).

def _and(*fs):
    return ("and", list(fs))


def _or(*fs):
    return ("or", list(fs))


def _not(f):
    return ("not", f)


def _eval_np(f, V):
    if isinstance(f, bool):
        return np.full(V.shape[0], f)
    if isinstance(f, (int, np.integer)):
        return V[:, f]
    tag = f[0]
    if tag == "not":
        return ~_eval_np(f[1], V)
    parts = [_eval_np(g, V) for g in f[1]]
    if tag == "and":
        return np.logical_and.reduce(parts) if parts else np.full(V.shape[0], True)
    return np.logical_or.reduce(parts) if parts else np.full(V.shape[0], False)


def _eval_row(f, row):
    if isinstance(f, bool):
        return f
    if isinstance(f, (int, np.integer)):
        return bool(row[f])
    tag = f[0]
    if tag == "not":
        return not _eval_row(f[1], row)
    if tag == "and":
        return all(_eval_row(g, row) for g in f[1])
    return any(_eval_row(g, row) for g in f[1])


def _models(nvars, constraints, cap=200000):
    """All 0/1 rows over nvars satisfying every (rel, f, g) constraint."""
    if nvars <= NUMPY_VARS:
        V = ((np.arange(1 << nvars)[:, None] >> np.arange(nvars)[None, :]) & 1).astype(bool)
        ok = np.ones(len(V), dtype=bool)
        for rel, f, g in constraints:
            a, b = _eval_np(f, V[ok]), _eval_np(g, V[ok])
            keep = (a == b) if rel == "eq" else (~a | b)
            idx = np.flatnonzero(ok)
            ok[idx[~keep]] = False
        return V[ok]
    return _models_sat(nvars, constraints, cap)


def _models_sat(nvars, constraints, cap):
    from pysat.solvers import Minisat22
    clauses = []
    counter = [nvars]

    def lit(f):
        if isinstance(f, bool):
            counter[0] += 1
            v = counter[0]
            clauses.append([v] if f else [-v])
            return v
        if isinstance(f, (int, np.integer)):
            return int(f) + 1
        if f[0] == "not":
            return -lit(f[1])
        ls = [lit(g) for g in f[1]]
        counter[0] += 1
        v = counter[0]
        if f[0] == "and":
            for x in ls:
                clauses.append([-v, x])
            clauses.append([v] + [-x for x in ls])
        else:
            for x in ls:
                clauses.append([v, -x])
            clauses.append([-v] + ls)
        return v

    for rel, f, g in constraints:
        a, b = lit(f), lit(g)
        clauses.append([-a, b])
        if rel == "eq":
            clauses.append([a, -b])
    rows = []
    with Minisat22(bootstrap_with=clauses) as s:
        while s.solve():
            m = s.get_model()
            row = [m[i] > 0 for i in range(nvars)]
            rows.append(row)
            if len(rows) > cap:
                raise CoalcanError("CAP-EXCEEDED", "too many one-step prime filters")
            s.add_clause([-(i + 1) if row[i] else i + 1 for i in range(nvars)])
    return np.array(rows, dtype=bool).reshape(len(rows), nvars)


# ----------------------------------------------------------- one-step algebras

def _semantic_logic(logic, grade_cap=None):
    """The logic whose generators present L (nabla logics go through their
    modal presentation)."""
    k = logic.kind
    if k == "nabla":
        F = logic.functor
        if isinstance(F, Powerset):
            return classical_logic()
        return tree_logic(F.n, omega=F.omega, star=F.star)
    if k == "gml":
        G = grade_cap or len(logic.sig.symbols)
        return gml_logic(G, G)
    if k == "intuitionistic":
        return relational_logic(logic.sig)
    return logic


def nabla_to_modal(t):
    """Rewrite nabla terms into the modal presentation: a set nabla becomes
    box(join) & the diamonds of its members, a tuple nabla of length k
    becomes node_k."""
    tag = t[0]
    if tag == "nabla":
        args = [nabla_to_modal(a) for a in t[2]]
        if t[1] == "tup":
            return ("app", f"node{len(args)}", tuple(args))
        return conj(("app", "box", (disj(*args),)), *[("app", "dia", (a,)) for a in args])
    if tag in ("and", "or"):
        return (tag, nabla_to_modal(t[1]), nabla_to_modal(t[2]))
    if tag == "not":
        return ("not", nabla_to_modal(t[1]))
    if tag == "app":
        return ("app", t[1], tuple(nabla_to_modal(a) for a in t[2]))
    return t


class OneStepAlgebra:
    """A finite host A, a logic, and optionally A's own expansion tables
    (which make A an L-algebra)."""

    def __init__(self, A, logic, ops=None, grade_cap=None, max_gens=4096):
        self.A = A
        self.logic = logic
        self.sem = _semantic_logic(logic, grade_cap)
        self.ops = {k: np.asarray(v) for k, v in (ops or {}).items()}
        self.grade_cap = grade_cap
        _, fl = prime_filters(A)
        self.filters = [f.members for f in fl]
        self.filter_objs = fl
        self.nf = len(self.filters)
        self.eta = [sum(1 << u for u, F in enumerate(self.filters) if a in F) for a in range(A.n)]
        self.is_ba = A.kind == "BA"
        self.gens = []
        self.gindex = {}
        self.components = []         # list of (name, [gen indices])
        self.constraints = {}        # component name -> list of constraints
        self._build(max_gens)
        self._vals = {}
        self.provenance = []

    # generators and axioms -------------------------------------------------

    def _gen(self, sym, args, comp):
        key = (sym, tuple(args))
        if key not in self.gindex:
            self.gindex[key] = len(self.gens)
            self.gens.append(key)
            comp.append(self.gindex[key])
        return self.gindex[key]

    def g(self, sym, args):
        return self.gindex[(sym, tuple(args))]

    def _build(self, max_gens):
        A, sem = self.A, self.sem
        n = A.n
        els = range(n)
        k = sem.kind
        if k in ("tree",) and not self.is_ba:
            raise CoalcanError("INPUT-ERROR", "tree logic needs a boolean host")
        if k == "classical":
            comp = []
            for a in els:
                self._gen("dia", (a,), comp)
            self.components.append(("dia", comp))
            cs = [("eq", self.g("dia", (A.bot,)), False)]
            for a in els:
                for b in els:
                    if a < b:
                        cs.append(("eq", self.g("dia", (A.join(a, b),)),
                                   _or(self.g("dia", (a,)), self.g("dia", (b,)))))
            self.constraints["dia"] = cs
        elif k == "gml":
            G = len(sem.sig.symbols)
            if G * n > max_gens:
                raise CoalcanError("CAP-EXCEEDED", "grade cap too large for this host")
            comp = []
            for i in range(1, G + 1):
                for a in els:
                    self._gen(f"k{i}", (a,), comp)
            self.components.append(("gml", comp))
            self.constraints["gml"] = self._gml_axioms(G)
        elif k == "tree":
            d = sem.functor.n
            total = sum(n ** j for j in range(d + 1))
            if total > max_gens:
                raise CoalcanError("CAP-EXCEEDED", f"{total} tree generators")
            comp = []
            for j in range(d + 1):
                for args in product(els, repeat=j):
                    self._gen(f"node{j}", args, comp)
            self.components.append(("tree", comp))
            self.constraints["tree"] = self._tree_axioms(d, sem.functor)
        elif k == "relational":
            for s in sem.sig.symbols.values():
                if s.arity and n ** s.arity > max_gens:
                    raise CoalcanError("CAP-EXCEEDED", f"too many generators for {s.name}")
                comp = []
                for args in product(els, repeat=s.arity):
                    self._gen(s.name, args, comp)
                self.components.append((s.name, comp))
                self.constraints[s.name] = self._rel_axioms(s)
        else:
            raise CoalcanError("INPUT-ERROR", f"no one-step presentation for {sem.name}")

    def _gml_axioms(self, G):
        A = self.A
        els = range(A.n)

        def h(i, a):
            return True if i == 0 else self.g(f"k{i}", (a,))

        cs = [("eq", self.g("k1", (A.bot,)), False)]
        for a in els:
            for b in els:
                if a < b:
                    cs.append(("eq", self.g("k1", (A.join(a, b),)), _or(h(1, a), h(1, b))))
        for kk in range(2, G + 1):
            for a in els:
                for l in range(1, kk):
                    cs.append(("le", h(kk, a), h(l, a)))
        for kk in range(1, G + 1):
            for a in els:
                for b in els:
                    ab, anb = A.meet(a, b), A.meet(a, A.neg(b))
                    cs.append(("eq", h(kk, a), _or(*[_and(h(i, ab), h(kk - i, anb)) for i in range(kk + 1)])))
                    cs.append(("le", _and(_not(h(1, anb)), h(kk, a)), h(kk, b)))
        return cs

    def _tree_axioms(self, d, F):
        A = self.A
        els = list(range(A.n))
        top, bot = A.top, A.bot
        cs = []
        tops = {j: self.g(f"node{j}", (top,) * j) for j in range(d + 1)}
        for j in range(d + 1):
            for jj in range(j + 1, d + 1):
                cs.append(("eq", _and(tops[j], tops[jj]), False))
        for j in range(1, d + 1):
            name = f"node{j}"
            for a in product(els, repeat=j):
                ga = self.g(name, a)
                for b in product(els, repeat=j):
                    if a < b:
                        cs.append(("eq", _and(ga, self.g(name, b)),
                                   self.g(name, tuple(A.meet(x, y) for x, y in zip(a, b)))))
                for i in range(j):
                    if a[i] == bot:
                        cs.append(("eq", ga, False))
                    for y in els:
                        if y > a[i]:
                            c = list(a)
                            c[i] = y
                            c2 = list(a)
                            c2[i] = A.join(a[i], y)
                            cs.append(("eq", self.g(name, c2), _or(ga, self.g(name, c))))
                # corrected Tree 3, relativized to arity j
                flips = []
                for i in range(j):
                    c = [top] * j
                    c[i] = A.neg(a[i])
                    flips.append(self.g(name, c))
                cs.append(("eq", _and(_not(ga), tops[j]), _or(*flips)))
        if not F.omega:
            cs.append(("eq", _or(*tops.values()), True))
        return cs

    def _rel_axioms(self, s):
        A = self.A
        els = range(A.n)
        cs = []
        name = s.name
        if s.arity == 0:
            if s.law == "meet-law":
                cs.append(("eq", self.g(name, ()), True))
            return cs
        for args in product(els, repeat=s.arity):
            ga = self.g(name, args)
            for i in range(s.arity):
                anti = s.tonicity[i] == "anti"
                join_like = (s.law == "join-law") != anti      # argument sees joins
                unit = A.bot if join_like else A.top
                result = (s.law == "meet-law")                 # value at the unit
                if args[i] == unit:
                    cs.append(("eq", ga, result))
                for y in els:
                    if y > args[i]:
                        c = list(args)
                        c[i] = y
                        c2 = list(args)
                        c2[i] = A.join(args[i], y) if join_like else A.meet(args[i], y)
                        combine = _or if s.law == "join-law" else _and
                        cs.append(("eq", self.g(name, c2), combine(ga, self.g(name, c))))
        return cs

    # prime filters of L(A) ---------------------------------------------------

    def valuations(self, comp):
        if comp not in self._vals:
            idx = dict(self.components)[comp]
            local = {gi: k for k, gi in enumerate(idx)}

            def rel(f):
                if isinstance(f, bool):
                    return f
                if isinstance(f, (int, np.integer)):
                    return local[int(f)]
                if f[0] == "not":
                    return ("not", rel(f[1]))
                return (f[0], [rel(x) for x in f[1]])

            cs = [(r, rel(a), rel(b)) for r, a, b in self.constraints[comp]]
            self._vals[comp] = _models(len(idx), cs)
        return self._vals[comp]

    def count(self):
        c = 1
        for name, _ in self.components:
            c *= len(self.valuations(name))
        return c

    def satisfies_axioms(self, row_by_gen):
        """row_by_gen: full bool array over all generators."""
        for comp, idx in self.components:
            for r, a, b in self.constraints[comp]:
                x, y = _eval_row(a, row_by_gen), _eval_row(b, row_by_gen)
                if (r == "eq" and x != y) or (r == "le" and x and not y):
                    return False
        return True

    # the transpose -----------------------------------------------------------

    def delta_hat(self, obj, comp=None):
        """The prime filter of L(A) given by a functor object over Pf(A),
        as a bool row (over one component, or over all generators)."""
        idx = range(len(self.gens)) if comp is None else dict(self.components)[comp]
        row = np.zeros(len(idx), dtype=bool)
        for k, gi in enumerate(idx):
            sym, args = self.gens[gi]
            sets = [self.eta[a] for a in args]
            row[k] = self.sem.step(("app", sym, ()), sets, obj)
        return row

    def algebra_valuation(self, u):
        """Pf of the structure map: generators whose value in A lies in u."""
        F = self.filters[u]
        row = np.zeros(len(self.gens), dtype=bool)
        for gi, (sym, args) in enumerate(self.gens):
            tab = self._op(sym)
            row[gi] = int(tab[tuple(args)] if args else tab) in F
        return row

    def _op(self, sym):
        if sym in self.ops:
            return self.ops[sym]
        if self.logic.kind == "nabla" and sym.startswith("node"):
            k = int(sym[4:])
            key = f"nabla{k}"
            if key in self.ops:
                return self.ops[key]
        raise CoalcanError("MISSING-INTERPRETATION", f"no table for {sym}")

    def check_expansions(self):
        """A's tables satisfy every one-step axiom instance (at each prime
        filter, which separates elements)."""
        bad = []
        for u in range(self.nf):
            if not self.satisfies_axioms(self.algebra_valuation(u)):
                bad.append(u)
        return bad


# ----------------------------------------------------------------- sections

class Section:
    def __init__(self, osa, table, inf=None):
        self.osa = osa
        self.table = table            # comp -> {row bytes: partial object}
        self.inf = inf or {}          # comp -> {row bytes: set of filters with INF}

    def partial(self, comp, row):
        return self.table[comp][row.tobytes()]

    def apply(self, full_row):
        """Functor object for a full valuation over all generators."""
        osa = self.osa
        parts = []
        for comp, idx in osa.components:
            parts.append((comp, self.partial(comp, np.asarray(full_row)[idx])))
        return _combine(osa, parts)

    def trace(self):
        out = []
        for comp, _ in self.osa.components:
            for key, obj in self.table[comp].items():
                row = np.frombuffer(key, dtype=bool)
                on = [self.osa.gens[gi] for gi, b in zip(dict(self.osa.components)[comp], row) if b]
                out.append((comp, on, obj))
        return out


def _combine(osa, parts):
    if osa.sem.kind == "relational":
        return frel({comp: obj for comp, obj in parts})
    return parts[0][1]


def _filter_least(osa, u):
    return osa.A.bigmeet(osa.filters[u])


def _section_row(osa, comp, row):
    """The explicit right inverse on one component; returns (obj, inf set)."""
    A, sem = osa.A, osa.sem
    idx = dict(osa.components)[comp]
    on = {osa.gens[gi] for gi, b in zip(idx, row) if b}
    k = sem.kind
    if k == "classical":
        S = [u for u in range(osa.nf) if all(("dia", (a,)) in on for a in osa.filters[u])]
        return fset(S), set()
    if k == "gml":
        G = len(sem.sig.symbols)
        tab, inf = {}, set()
        for u in range(osa.nf):
            at = _filter_least(osa, u)
            m = max([i for i in range(1, G + 1) if (f"k{i}", (at,)) in on] + [0])
            if m:
                tab[u] = m
            if m == G:
                inf.add(u)
        return fbag(tab), inf
    if k == "tree":
        d = sem.functor.n
        top = A.top
        ks = [j for j in range(d + 1) if (f"node{j}", (top,) * j) in on]
        if not ks:
            if sem.functor.star:
                return STAR, set()
            raise CoalcanError("NO-SECTION", "no arity is possible and the functor has no star point",
                               valuation=sorted(on))
        j = ks[0]
        tup = []
        for i in range(j):
            mem = frozenset(a for a in range(A.n)
                            if (f"node{j}", tuple(a if p == i else top for p in range(j))) in on)
            hit = [u for u in range(osa.nf) if osa.filters[u] == mem]
            if not hit:
                raise CoalcanError("NO-SECTION", f"position {i} is not a prime filter", valuation=sorted(on))
            tup.append(hit[0])
        return ftup(tup), set()
    if k == "relational":
        s = sem.sig.get(comp)
        iso = [i for i, t in enumerate(s.tonicity) if t != "anti"]
        anti = [i for i, t in enumerate(s.tonicity) if t == "anti"]
        F = osa.filters
        tuples = []
        for fs in product(range(osa.nf), repeat=s.arity):
            good = True
            for args in product(range(A.n), repeat=s.arity):
                w = (comp, args) in on
                if s.law == "meet-law":
                    if w and all(args[j] in F[fs[j]] for j in anti) and not all(args[i] in F[fs[i]] for i in iso):
                        good = False
                else:
                    if all(args[i] in F[fs[i]] for i in iso) and not any(args[j] in F[fs[j]] for j in anti) and not w:
                        good = False
                if not good:
                    break
            if good:
                tuples.append(fs)
        return frozenset(tuples), set()
    raise CoalcanError("INPUT-ERROR", f"no section for {sem.name}")


def build_section(osa):
    """Explicit section, verified exhaustively: delta_hat(s(w)) = w."""
    table, infs = {}, {}
    for comp, idx in osa.components:
        table[comp], infs[comp] = {}, {}
        for row in osa.valuations(comp):
            part, inf = _section_row(osa, comp, row)
            obj = _combine(osa, [(comp, part)])
            back = osa.delta_hat(obj, comp)
            if not np.array_equal(back, row):
                on = [osa.gens[gi] for gi, b in zip(idx, row) if b]
                raise CoalcanError("NO-SECTION", f"delta-hat does not return the valuation {on}",
                                   valuation=on)
            table[comp][row.tobytes()] = part
            if inf:
                infs[comp][row.tobytes()] = inf
    return Section(osa, table, infs)


def delta_hat_injective(osa, objects=None):
    """Distinct functor objects over Pf(A) give distinct prime filters."""
    from .coalg import Functor  # noqa: F401  (documentation aid)
    objs = objects if objects is not None else osa.sem.functor.objects(range(osa.nf))
    seen = {}
    for o in objs:
        key = osa.delta_hat(o).tobytes()
        if key in seen and seen[key] != o:
            return False
        seen[key] = o
    return True


def delta_injective(logic, n):
    """delta_X injective for |X| = n, i.e. every one-step prime filter of
    L(P X) is realized by an element of F X.  None when out of cap."""
    if n > 4:
        return None
    A = PowersetBA(list(range(n)))
    try:
        osa = OneStepAlgebra(A, logic)
    except CoalcanError:
        return None
    realized = {}
    for comp, _ in osa.components:
        realized[comp] = set()
    for obj in osa.sem.functor.objects(range(osa.nf)):
        for comp, _ in osa.components:
            realized[comp].add(osa.delta_hat(obj, comp).tobytes())
    return all({r.tobytes() for r in osa.valuations(comp)} <= realized[comp] for comp, _ in osa.components)


# --------------------------------------------------------- prime extension

def prime_extend(A, F, I):
    """Least prime filter containing F and missing I (exhaustive search)."""
    Fm = F.members if isinstance(F, FilterLike) else frozenset(F)
    Im = I.members if isinstance(I, FilterLike) else frozenset(I)
    if Fm & Im:
        raise CoalcanError("NOT-DISJOINT", f"filter and ideal share {sorted(Fm & Im)[0]}")
    _, fl = prime_filters(A)
    cands = [f for f in fl if Fm <= f.members and not (f.members & Im)]
    if not cands:
        raise CoalcanError("NOT-DISJOINT", "no prime filter separates the filter from the ideal")
    cands.sort(key=lambda f: (len(f.members), sorted(f.members)))
    return cands[0]


# ------------------------------------------------------ Jonsson-Tarski frame

class JTExtension:
    def __init__(self, source, frame, eta, ext, complex_sets, section):
        self.source = source
        self.frame = frame
        self.eta = eta
        self.ext = ext                  # symbol -> {tuple of masks: mask}
        self.complex_sets = complex_sets
        self.section = section
        self.homomorphism = True
        self.extensions_coincide = False

    def complex_algebra(self):
        """The complex algebra as a lattice on masks, with extended tables."""
        sets = self.complex_sets
        n = len(sets)
        pos = {m: i for i, m in enumerate(sets)}
        leq = np.array([[a & ~b == 0 for b in sets] for a in sets], dtype=bool).reshape(n, n)
        full = (1 << self.frame.n) - 1
        neg = [pos[full & ~m] for m in sets] if self.source.is_ba else None
        L = TableLattice("BA" if self.source.is_ba else "BDL", list(sets), leq, neg=neg)
        ops = {}
        for sym, tab in self.ext.items():
            ar = len(next(iter(tab))) if tab else 0
            arr = np.zeros((n,) * ar, dtype=np.int32) if ar else np.int32(0)
            for args, m in tab.items():
                if ar:
                    arr[tuple(pos[a] for a in args)] = pos[m]
                else:
                    arr = np.int32(pos[m])
            ops[sym] = arr
        return L, ops


def _complex_sets(frame, is_ba):
    n = frame.n
    if is_ba:
        return list(range(1 << n))
    return frame.upsets()


def jt_extend(osa, section=None):
    if section is None:
        section = build_section(osa)
    bad = osa.check_expansions()
    if bad:
        raise CoalcanError("INPUT-ERROR", f"the host tables violate the one-step axioms at filter {bad[0]}")
    names = [f"F{u}" for u in range(osa.nf)]
    gamma = {}
    for u in range(osa.nf):
        gamma[u] = section.apply(osa.algebra_valuation(u))
    poset = None
    if not osa.is_ba:
        from .lattice import FinPoset
        poset = FinPoset(list(range(osa.nf)),
                         np.array([[osa.filters[a] <= osa.filters[b] for b in range(osa.nf)]
                                   for a in range(osa.nf)], dtype=bool).reshape(osa.nf, osa.nf))
    frame = Coalgebra(range(osa.nf), gamma, poset=poset, logic=osa.sem).renamed(names)
    sets = _complex_sets(frame, osa.is_ba)
    ext = {}
    syms = sorted({sym for sym, _ in osa.gens})
    cache = {}
    for sym in syms:
        ar = len(next(args for s, args in osa.gens if s == sym))
        tab = {}
        for args in product(sets, repeat=ar):
            key = (sym, args)
            m = 0
            for u in range(osa.nf):
                if osa.sem.step(("app", sym, ()), list(args), frame.gamma[u]):
                    m |= 1 << u
            cache[key] = m
            tab[args] = m
        ext[sym] = tab
    jt = JTExtension(osa, frame, osa.eta, ext, sets, section)
    for sym, args in osa.gens:
        lhs = osa.eta[int(osa._op(sym)[tuple(args)] if args else osa._op(sym))]
        rhs = ext[sym][tuple(osa.eta[a] for a in args)]
        if lhs != rhs:
            jt.homomorphism = False
            raise CoalcanError("HOMOMORPHISM-FAILURE",
                               f"eta fails on {sym}({', '.join(str(osa.A.id(a)) for a in args)})",
                               generator=(sym, args))
    # on a finite host eta is onto the complex algebra, so the extended
    # expansion is the transported original one (the sigma-extension)
    jt.extensions_coincide = sorted(set(osa.eta)) == sorted(sets)
    return jt


def intuitionistic_view(jt):
    """The diagonal of a relational Heyting frame as a successor frame."""
    from .coalg import intuitionistic_logic
    fr = jt.frame
    gamma = {}
    for u in range(fr.n):
        comp = fr.gamma[u].component("imp")
        gamma[u] = fset(a for a, b in comp if a == b)
    return Coalgebra(range(fr.n), gamma, poset=fr.poset, logic=intuitionistic_logic()).renamed(fr.carrier)


# ----------------------------------------------------- algebras from frames

def complex_ops(M, sem, is_ba=True):
    """Expansion tables of the complex algebra of a frame, indexed by mask."""
    sets = _complex_sets(M, is_ba)
    pos = {m: i for i, m in enumerate(sets)}
    ops = {}
    for s in sem.sig.symbols.values():
        shape = (len(sets),) * s.arity
        arr = np.zeros(shape, dtype=np.int64) if s.arity else None
        for args in product(range(len(sets)), repeat=s.arity):
            m = 0
            for u in range(M.n):
                if sem.step(("app", s.name, ()), [sets[a] for a in args], M.gamma[u]):
                    m |= 1 << u
            if s.arity:
                arr[args] = pos[m]
            else:
                arr = np.int64(pos[m])
        ops[s.name] = arr
    return sets, ops


def generated_subalgebra(sets, ops, seeds, is_ba, full):
    """Closure of the seed masks under the lattice operations and the
    expansions; returns the sorted masks."""
    pos = {m: i for i, m in enumerate(sets)}
    cur = set(seeds) | {0, full}
    while True:
        new = set(cur)
        lst = sorted(cur)
        for a in lst:
            if is_ba:
                new.add(full & ~a)
            for b in lst:
                new.add(a & b)
                new.add(a | b)
        for name, tab in ops.items():
            ar = np.ndim(tab)
            for args in product(lst, repeat=ar):
                v = tab[tuple(pos[a] for a in args)] if ar else tab
                new.add(sets[int(v)])
        if new == cur:
            return sorted(cur)
        cur = new


def _mask_lattice(masks, is_ba, full):
    n = len(masks)
    leq = np.array([[a & ~b == 0 for b in masks] for a in masks], dtype=bool).reshape(n, n)
    pos = {m: i for i, m in enumerate(masks)}
    neg = [pos[full & ~m] for m in masks] if is_ba else None
    return TableLattice("BA" if is_ba else "BDL", list(masks), leq, neg=neg), pos


# ----------------------------------------------------------- the pipeline

class PipelineResult:
    def __init__(self):
        self.model = None
        self.designated = None
        self.phi_checks = []
        self.axiom_checks = []
        self.section_trace = []
        self.notes = []
        self.caps = {}

    @property
    def ok(self):
        return all(v for _, v in self.phi_checks) and all(v for _, v in self.axiom_checks)

    def report(self):
        from .coalg import format_coalg
        out = ["MODEL:"]
        out += ["  " + line for line in format_coalg(self.model).splitlines()]
        out.append(f"DESIGNATED-STATE: {self.designated}")
        for k, v in sorted(self.caps.items()):
            out.append(f"CAP: {k}={v}")
        out.append("AXIOM-CHECKS:")
        for name, v in self.phi_checks:
            out.append(f"  PHI {name}: {'holds' if v else 'FAILS'}")
        for name, v in self.axiom_checks:
            out.append(f"  AXIOM {name}: {'frame-valid' if v else 'NOT frame-valid'}")
        out.append("SECTION-TRACE:")
        out += ["  " + t for t in self.section_trace]
        for n in self.notes:
            out.append(f"NOTE: {n}")
        return "\n".join(out) + "\n"


def _frame_candidates(logic, n):
    F = logic.functor
    objs = F.objects(range(n))
    for choice in product(objs, repeat=n):
        yield Coalgebra(range(n), dict(enumerate(choice)), logic=logic).renamed([f"s{i}" for i in range(n)])


def _canonicity_gate(logic, axioms, attest):
    from .termlang import is_sahlqvist
    for k, ax in enumerate(axioms):
        if k in attest or show(ax.lhs) in attest:
            continue
        ok = False
        for dialect in ("general", "abstract", "classical", "gml", "substructural"):
            try:
                if is_sahlqvist(ax, logic.sig, dialect).accepted:
                    ok = True
                    break
            except CoalcanError:
                continue
        if not ok:
            raise CoalcanError("NON-CANONICAL-AXIOM", f"{ax!r} is not recognized as Sahlqvist; attest it to proceed")


def completeness_pipeline(logic, axioms, phi, max_states=3, attest=(), algebras=None, budget=None):
    """Finite realization of completeness-via-canonicity.

    A finite L-algebra validating the axioms in which the conjunction of phi
    is non-zero stands in for the Lindenbaum algebra: it is found by
    exhaustive search over frames up to ``max_states`` (or taken from
    ``algebras`` for relational logics), cut down to the subalgebra generated
    by the variables, and then re-built from its prime filters through an
    explicit section.
    """
    res = PipelineResult()
    axioms = list(axioms)
    phi = list(phi)
    _canonicity_gate(logic, axioms, set(attest))
    sem = _semantic_logic(logic)
    vs = sorted(set().union(*[variables(t) for t in phi]) if phi else set())
    target = conj(*phi) if phi else ("top",)
    res.caps = {"states": max_states, "variables": len(vs)}
    found = None
    if algebras is None:
        for n in range(1, max_states + 1):
            for M in _frame_candidates(logic, n):
                if not all(frame_valid(M, ax, budget=budget) for ax in axioms):
                    continue
                v = frame_valid(M, Equation(target, "=", ("bot",)), vs, budget=budget)
                if not v:
                    val = {p: M.mask(S) for p, S in v.countervaluation.items()}
                    found = ("frame", M, val)
                    break
            if found:
                break
    else:
        for A, ops in algebras:
            found = _algebra_candidate(A, ops, logic, axioms, target, vs, budget)
            if found:
                break
    if not found:
        raise CoalcanError("INCONSISTENT-Φ", f"no model of the axioms satisfies phi within {max_states} states")
    if found[0] == "frame":
        _, M, val = found
        is_ba = True
        sets, ops = complex_ops(M, sem, is_ba)
        full = (1 << M.n) - 1
        seeds = [val[p] for p in vs]
        sub = generated_subalgebra(sets, ops, seeds, is_ba, full)
        B, bpos = _mask_lattice(sub, is_ba, full)
        spos = {m: i for i, m in enumerate(sets)}
        bops = {}
        for name, tab in ops.items():
            ar = np.ndim(tab)
            arr = np.zeros((len(sub),) * ar, dtype=np.int32) if ar else None
            for args in product(range(len(sub)), repeat=ar):
                v = tab[tuple(spos[sub[a]] for a in args)] if ar else tab
                if ar:
                    arr[args] = bpos[sets[int(v)]]
                else:
                    arr = np.int32(bpos[sets[int(v)]])
            bops[name] = arr
        bval = {p: bpos[val[p]] for p in vs}
        res.notes.append(f"source frame has {M.n} states; generated subalgebra has {len(sub)} elements")
    else:
        _, B, bops, bval = found
    osa = OneStepAlgebra(B, logic, bops)
    osa.provenance.append("subalgebra generated by the variables (depth-capped Lindenbaum quotient)")
    from .termlang import ExpandedAlgebra
    EA = ExpandedAlgebra(B, bops)
    tval = EA.eval(nabla_to_modal(target) if logic.kind == "nabla" else target, bval)
    u = prime_extend(B, B.upset(tval), B.downset(B.bot))
    section = build_section(osa)
    jt = jt_extend(osa, section)
    model = jt.frame.with_valuation({p: osa.eta[bval[p]] for p in vs})
    # nabla logics evaluate on the frame through their own clauses
    model.logic = logic if logic.kind == "nabla" else osa.sem
    fl = [f.members for f in prime_filters(B)[1]]
    d = fl.index(u.members)
    res.model = model
    res.designated = model.carrier[d]
    for t in phi:
        res.phi_checks.append((show(t), model.carrier[d] in eval_term(model, t)))
    for ax in axioms:
        res.axiom_checks.append((repr(ax), bool(frame_valid(model, ax, budget=budget))))
    for comp, on, obj in section.trace()[:40]:
        from .coalg import format_obj
        res.section_trace.append(f"{comp}: {len(on)} generators -> {format_obj(obj) if hasattr(obj, 'kind') else sorted(obj)}")
    return res


def _algebra_candidate(A, ops, logic, axioms, target, vs, budget):
    from .termlang import ExpandedAlgebra
    EA = ExpandedAlgebra(A, ops)
    if not all(EA.validates(ax) for ax in axioms):
        return None
    if not vs:
        if EA.eval(target, {}) != A.bot:
            return ("algebra", A, ops, {})
        return None
    for vals in product(range(A.n), repeat=len(vs)):
        env = dict(zip(vs, vals))
        if EA.eval(target, env) != A.bot:
            return ("algebra", A, ops, env)
    return None


def heyting_algebras(max_size=4):
    """Finite Heyting algebras (all finite DLs) with their implication."""
    from .lattice import all_posets, downset_lattice
    seen = []
    out = []
    for n in range(1, 4):
        for P in all_posets(n):
            L = downset_lattice(P)
            if L.n > max_size:
                continue
            if any(L.order().is_isomorphic(M.order()) for M in seen):
                continue
            seen.append(L)
            out.append((L, {"imp": heyting_implication(L)}))
    return out


def heyting_implication(L):
    n = L.n
    imp = np.zeros((n, n), dtype=np.int32)
    for a in range(n):
        for b in range(n):
            imp[a, b] = L.bigjoin([c for c in range(n) if L.le(L.meet(c, a), b)])
    return imp
