"""Natural transformations between zoo functors, the induced syntax
translation on nabla languages, transfer checks, functor presentations and
lifted axiom sets."""

from itertools import product

import numpy as np

from .coalg import Bag, Coalgebra, Powerset, Tree, eval_term, fset, functor_from_name, nabla_logic
from .errors import CoalcanError
from .termlang import TOP, Equation, ExpandedAlgebra, conj, disj, is_sahlqvist, mk_nabla, nabla_sig


# ------------------------------------------------------ natural transformations

class NatTransf:
    """A natural transformation given by its component rule on objects."""

    def __init__(self, name, source, target, rule):
        self.name = name
        self.source = source
        self.target = target
        self.rule = rule

    def __call__(self, obj):
        return self.rule(obj)

    def naturality(self, max_carrier=3, sample=None, rng=None):
        """Check target(F f) . q_X == q_Y . source(F f) for functions between
        carriers up to max_carrier; returns the list of failures."""
        fails = []
        for nx in range(max_carrier + 1):
            for ny in range(1, max_carrier + 1):
                fns = list(product(range(ny), repeat=nx))
                if sample is not None and len(fns) > sample:
                    rng = rng or np.random.default_rng(0)
                    fns = [fns[i] for i in rng.choice(len(fns), sample, replace=False)]
                objs = self.source.objects(range(nx))
                for f in fns:
                    g = f.__getitem__
                    for a in objs:
                        left = self.target.fmap(g, self(a))
                        right = self(self.source.fmap(g, a))
                        if left != right:
                            fails.append((nx, ny, f, a))
        return fails

    def __repr__(self):
        return f"NatTransf({self.name}: {self.source.name} => {self.target.name})"


def _underlying(obj):
    if obj.kind in ("star",):
        return fset(())
    return fset(obj.elements())


def tuples_to_sets(n=3, star=True):
    """q: tuples of length <= n (plus star) to their underlying sets."""
    return NatTransf("tup-to-set", Tree(n, omega=True, star=star), Powerset(True), _underlying)


def bag_support(N=2):
    return NatTransf("bag-support", Bag(N), Powerset(True), _underlying)


def identity(F):
    return NatTransf("id", F, F, lambda o: o)


REGISTRY = {"tup-to-set": tuples_to_sets, "bag-support": bag_support}

# pairs (q, r): q on functors, r on the syntax side; only this one carries
# compatible semantics in the zoo
COMPATIBLE = {("tup-to-set", "nabla")}


def transformation_from_name(name, cap=3):
    if name == "tup-to-set":
        return tuples_to_sets(cap, star=True)
    if name == "bag-support":
        return bag_support(cap)
    if name.startswith("id:"):
        return identity(functor_from_name(name[3:]))
    raise CoalcanError("INPUT-ERROR", f"unknown natural transformation {name}")


# ----------------------------------------------------------- syntax side

def syntax_translate(t, q=None):
    """Tuple nabla -> set nabla, homomorphic on the connectives."""
    tag = t[0]
    if tag == "nabla":
        args = [syntax_translate(a, q) for a in t[2]]
        return mk_nabla("set", args)
    if tag in ("and", "or"):
        return (tag, syntax_translate(t[1], q), syntax_translate(t[2], q))
    if tag == "not":
        return ("not", syntax_translate(t[1], q))
    if tag == "app":
        return ("app", t[1], tuple(syntax_translate(a, q) for a in t[2]))
    return t


def preimages(t, arity_cap=3):
    """All tuple-nabla terms (tuples of length <= arity_cap) translating to t."""
    tag = t[0]
    if tag == "nabla":
        args = list(dict.fromkeys(t[2]))
        pre = [preimages(a, arity_cap) for a in args]
        out = []
        m = len(args)
        for k in range(m, arity_cap + 1) if m else [0]:
            for pick in product(range(m), repeat=k):
                if set(pick) != set(range(m)):
                    continue
                for choice in product(*[pre[i] for i in pick]):
                    out.append(mk_nabla("tup", list(choice)))
        return out
    if tag in ("and", "or"):
        return [(tag, a, b) for a in preimages(t[1], arity_cap) for b in preimages(t[2], arity_cap)]
    if tag == "not":
        return [("not", a) for a in preimages(t[1], arity_cap)]
    if tag == "app":
        return [("app", t[1], tuple(c)) for c in product(*[preimages(a, arity_cap) for a in t[2]])]
    return [t]


def canonical_preimage(t):
    """A single preimage: set arguments in their stored order."""
    tag = t[0]
    if tag == "nabla":
        return mk_nabla("tup", [canonical_preimage(a) for a in t[2]])
    if tag in ("and", "or"):
        return (tag, canonical_preimage(t[1]), canonical_preimage(t[2]))
    if tag == "not":
        return ("not", canonical_preimage(t[1]))
    return t


def quotient_coalgebra(q, M):
    """Same carrier and valuation, structure map post-composed with q."""
    logic = nabla_logic(q.target) if q.target.name in ("Pw", "P") else None
    gamma = {M.carrier[i]: q(g) for i, g in enumerate(M.gamma)}
    out = Coalgebra(M.carrier, gamma, logic=logic, functor=q.target)
    out.val = dict(M.val)
    return out


class TransferReport:
    def __init__(self, rows):
        self.rows = rows                  # (state, holds in M, holds in quotient)

    @property
    def violations(self):
        return [s for s, a, b in self.rows if a and not b]

    @property
    def ok(self):
        return not self.violations

    def lines(self):
        out = [f"STATE {s}: source={'yes' if a else 'no'} quotient={'yes' if b else 'no'}" for s, a, b in self.rows]
        out.append(f"VIOLATIONS: {len(self.violations)}")
        return out


def transfer_check(q, r, M, t):
    """Satisfaction of t in M must carry over to its translation in Q(M)."""
    rname = r if isinstance(r, str) else getattr(r, "name", str(r))
    if (q.name, rname) not in COMPATIBLE:
        raise CoalcanError("INCOMPATIBLE-PAIR", f"({q.name}, {rname}) is not a registered compatible pair")
    Q = quotient_coalgebra(q, M)
    src = eval_term(M, t)
    tgt = eval_term(Q, syntax_translate(t, q))
    return TransferReport([(x, x in src, x in tgt) for x in M.carrier])


def lambda_inclusion(q, n=2, arity=None):
    """Brute-force check of lambda(a) contained in P(r)(delta(q(a))) on all
    tuple-nabla generators over an n-point carrier: whenever a tuple object
    satisfies nabla(U1..Uk) its underlying set satisfies nabla{U1..Uk}."""
    src = nabla_logic(q.source)
    tgt = nabla_logic(q.target)
    arity = q.source.n if arity is None else arity
    objs = q.source.objects(range(n))
    bad = []
    for k in range(arity + 1):
        for sets in product(range(1 << n), repeat=k):
            for b in objs:
                if src.step(("nabla", "tup", ()), sets, b) and not tgt.step(("nabla", "set", ()), sets, q(b)):
                    bad.append((sets, b))
    return bad


# ------------------------------------------------------------ presentations

class _UF:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.p[max(a, b)] = min(a, b)

    def classes(self):
        out = {}
        for i in range(len(self.p)):
            out.setdefault(self.find(i), []).append(i)
        return sorted(out.values())


class PresentationQuotient:
    def __init__(self, functor, X, cap, generators, classes, minimal):
        self.functor = functor
        self.X = list(X)
        self.cap = cap
        self.generators = generators          # list of (alpha, h)
        self.classes = classes                # list of lists of generator indices
        self.minimal = minimal

    def image(self, cls):
        a, h = self.generators[cls[0]]
        return self.functor.fmap(lambda i: self.X[h[i]], a)


class PresentationCertificate:
    def __init__(self, canonical, minimal, closures_equal, bijection, images_ok, atoms):
        self.canonical = canonical
        self.minimal = minimal
        self.closures_equal = closures_equal
        self.bijection = bijection
        self.images_ok = images_ok
        self.atoms = atoms                    # k -> base-full objects of F(k)

    @property
    def ok(self):
        return self.closures_equal and self.bijection and self.images_ok

    def lines(self):
        return [f"FUNCTOR: {self.canonical.functor.name}",
                f"CARRIER: {len(self.canonical.X)}",
                f"CAP: {self.canonical.cap}",
                f"GENERATORS: {len(self.canonical.generators)}",
                f"CANONICAL-CLASSES: {len(self.canonical.classes)}",
                f"MINIMAL-GENERATORS: {len(self.minimal.generators)}",
                f"MINIMAL-CLASSES: {len(self.minimal.classes)}",
                f"ATOMS-PER-ARITY: " + " ".join(f"{k}:{len(v)}" for k, v in sorted(self.atoms.items())),
                f"CLOSURES-EQUAL: {'yes' if self.closures_equal else 'no'}",
                f"BIJECTION: {'yes' if self.bijection else 'no'}"]


def presentations(F, X, n):
    """Canonical and minimal presentation quotients of F at carrier X with
    arity cap n, plus the certificate comparing them."""
    if isinstance(F, str):
        F = functor_from_name(F)
    X = list(X)
    if len(X) > 4 or n > 4:
        raise CoalcanError("CAP-EXCEEDED", "presentations need |X| <= 4 and n <= 4")
    gens = []
    by_arity = {}
    for k in range(n + 1):
        for a in F.objects(range(k)):
            for h in product(range(len(X)), repeat=k):
                by_arity.setdefault(k, []).append(len(gens))
                gens.append((a, h))
    index = {(a, h): i for i, (a, h) in enumerate(gens)}
    # ~ : (alpha, h' . f) ~ (F f(alpha), h')
    sim = _UF(len(gens))
    for i, (a, h) in enumerate(gens):
        k = len(h)
        for k2 in range(n + 1):
            for f in product(range(k2), repeat=k):
                b = F.fmap(f.__getitem__, a)
                for h2 in product(range(len(X)), repeat=k2):
                    if all(h2[f[j]] == h[j] for j in range(k)):
                        sim.union(i, index[(b, h2)])
    # approx : F h(alpha) = F g(beta)
    img = [F.fmap(h.__getitem__, a) for a, h in gens]
    approx = _UF(len(gens))
    first = {}
    for i, o in enumerate(img):
        if o in first:
            approx.union(first[o], i)
        else:
            first[o] = i
    sc, ac = sim.classes(), approx.classes()
    canonical = PresentationQuotient(F, X, n, gens, sc, False)
    # minimal: base-full generators only
    full = [i for i, (a, h) in enumerate(gens) if len(F.base(a)) == len(h)]
    mclasses = {}
    for i in full:
        mclasses.setdefault(approx.find(i), []).append(i)
    minimal = PresentationQuotient(F, X, n, [gens[i] for i in full], sorted(mclasses.values()), True)
    bijection = set(mclasses) == {approx.find(c[0]) for c in ac}
    images_ok = len({img[c[0]] for c in ac}) == len(ac)
    atoms = {k: [a for a in F.objects(range(k)) if len(F.base(a)) == k] for k in range(n + 1)}
    return PresentationCertificate(canonical, minimal, sc == ac, bijection, images_ok, atoms)


# -------------------------------------------------------- lifted equations

class LiftedEquation:
    def __init__(self, eq, sahlqvist):
        self.eq = eq
        self.sahlqvist = sahlqvist


class LiftedSet:
    def __init__(self, source, items, cap):
        self.source = source
        self.items = items
        self.cap = cap

    @property
    def equations(self):
        return [x.eq for x in self.items]

    def lines(self):
        out = [f"# cap: arity {self.cap}"]
        for x in self.items:
            out.append(f"{x.eq!r}    # sahlqvist: {'yes' if x.sahlqvist else 'no'}")
        return out


def lift_equations(E, arity_cap=3, check=True):
    """All capped preimage pairs (a', b') of each a = b in E, with a
    Sahlqvist verdict for each under the tuple-nabla signature."""
    sig = nabla_sig("tup")
    items = []
    for eq in E:
        for a in preimages(eq.lhs, arity_cap):
            for b in preimages(eq.rhs, arity_cap):
                e = Equation(a, eq.rel, b)
                ok = None
                if check:
                    ok = _sahlqvist_any(e, sig)
                items.append(LiftedEquation(e, ok))
    return LiftedSet(list(E), items, arity_cap)


def _sahlqvist_any(eq, sig):
    for dialect in ("general", "abstract"):
        try:
            if is_sahlqvist(eq, sig, dialect).accepted:
                return True
        except CoalcanError:
            continue
    return False


def transitivity_axiom():
    """(4): nabla{nabla{p}} -> nabla{p}, as an equation with top."""
    p = ("var", "p")
    inner = mk_nabla("set", [p])
    return Equation(disj(("not", mk_nabla("set", [inner])), inner), "=", TOP)


def three_successor_axiom():
    """t' = top with each diamond written as nabla{x, top}."""
    p, q, r = (("var", v) for v in "pqr")
    dia = lambda x: mk_nabla("set", [x, TOP])            # noqa: E731
    t = conj(dia(p), dia(conj(q, ("not", p))), dia(conj(r, ("not", p), ("not", q))))
    return Equation(t, "=", TOP)


# ------------------------------------------- orthogonality at finite scale

def _nabla_set_value(L, dia, vals):
    """nabla{a1..ak} = box(join) & the diamonds, box = not dia not."""
    j = L.bigjoin(vals)
    box = L.neg(int(dia[L.neg(j)]))
    return L.bigmeet([box] + [int(dia[v]) for v in vals])


def modal_algebras(max_size=4):
    """BAs up to max_size elements with every normal additive diamond."""
    from .lattice import PowersetBA
    out = []
    m = 0
    while (1 << m) <= max_size:
        L = PowersetBA(list(range(m)))
        atoms = L.atoms()
        for imgs in product(range(L.n), repeat=len(atoms)):
            dia = np.zeros(L.n, dtype=np.int32)
            for x in range(L.n):
                dia[x] = L.bigjoin([imgs[i] for i, a in enumerate(atoms) if L.le(a, x)])
            out.append((L, dia))
        m += 1
    return out


def set_algebra(L, dia):
    return ExpandedAlgebra(L, {"dia": dia}, nabla=lambda kind, vals: _nabla_set_value(L, dia, list(vals)))


def q_precomposed(L, dia):
    """QA: a tuple nabla is read as the set nabla of its entries, so the
    same callback serves both languages."""
    return set_algebra(L, dia)


class OrthogonalityRow:
    def __init__(self, size, valid_E, valid_Estar):
        self.size = size
        self.valid_E = valid_E
        self.valid_Estar = valid_Estar


def orthogonality_transfer(E, arity_cap=3, max_size=4):
    """For every modal algebra up to max_size: A validates E iff QA
    validates every capped element of E*."""
    Es = lift_equations(E, arity_cap, check=False).equations
    rows = []
    for L, dia in modal_algebras(max_size):
        A = set_algebra(L, dia)
        QA = q_precomposed(L, dia)
        vE = all(A.validates(e) for e in E)
        vS = all(QA.validates(e) for e in Es)
        rows.append(OrthogonalityRow(L.n, vE, vS))
    return rows
