"""Canonical-extension machinery on finite dense/compact pairs.

A pair is an ambient finite lattice together with a sub-lattice ``sub``.
Closed elements are meets of subsets of ``sub``, open ones are joins.  The
sigma and pi extensions of a map on ``sub`` are computed with the interval
formulas over boxes [d, u] with d closed and u open, for every tonicity.
"""

from functools import reduce
from itertools import combinations, product

import numpy as np

from .errors import CoalcanError

TONICITIES = ("iso", "anti", "none")


def bigmeet(L, vals):
    mt = L.tables()[0]
    return reduce(lambda a, b: int(mt[a, b]), vals, L.top)


def bigjoin(L, vals):
    jt = L.tables()[1]
    return reduce(lambda a, b: int(jt[a, b]), vals, L.bot)


def _close(L, start, op, unit):
    out = {unit} | set(start)
    changed = True
    while changed:
        changed = False
        for a in list(out):
            for b in list(out):
                c = op(a, b)
                if c not in out:
                    out.add(c)
                    changed = True
    return out


class DenseCompactPair:
    """Ambient lattice plus a sub-lattice given by ambient indices."""

    def __init__(self, ambient, sub=None):
        self.ambient = ambient
        L = ambient
        sub = range(L.n) if sub is None else sub
        self.sub = tuple(sorted(set(int(s) for s in sub)))
        sset = set(self.sub)
        for a in self.sub:
            for b in self.sub:
                if L.meet(a, b) not in sset or L.join(a, b) not in sset:
                    raise CoalcanError("INPUT-ERROR", "sub is not closed under meet and join")
            if L.kind == "BA" and L.neg(a) not in sset:
                raise CoalcanError("INPUT-ERROR", "sub is not closed under complement")
        self.K, self.O = closed_open_elements(self)

    def is_bounded(self):
        """sub contains the ambient bottom and top; the extension identities
        are only meaningful for such pairs."""
        return self.ambient.bot in self.sub and self.ambient.top in self.sub

    @classmethod
    def full(cls, L):
        return cls(L, range(L.n))

    def is_dense(self):
        """Every element is a join of meets and a meet of joins of sub."""
        L = self.ambient
        ok1 = all(bigjoin(L, [k for k in self.K if L.le(k, x)]) == x for x in range(L.n))
        ok2 = all(bigmeet(L, [o for o in self.O if L.le(x, o)]) == x for x in range(L.n))
        return ok1 and ok2

    def is_compact(self):
        """meet X <= join Y for X,Y within sub has finite witnesses; on a finite
        sub this always holds, so we check the closed/open form directly."""
        L = self.ambient
        for k in self.K:
            for o in self.O:
                if L.le(k, o):
                    if not any(L.le(k, a) and L.le(a, o) for a in self.sub):
                        return False
        return True


def closed_open_elements(pair):
    L = pair.ambient
    K = _close(L, pair.sub, L.meet, L.top)
    O = _close(L, pair.sub, L.join, L.bot)
    return tuple(sorted(K)), tuple(sorted(O))


class MapTable:
    """An n-ary map sub^n -> sub (or ambient^n -> ambient), with tonicity."""

    def __init__(self, pair, arity, table, tonicity=None, name="f"):
        self.pair = pair
        self.arity = arity
        self.table = dict(table)
        self.tonicity = list(tonicity or ["none"] * arity)
        self.name = name
        dom = list(product(pair.sub, repeat=arity))
        missing = [t for t in dom if t not in self.table]
        if missing:
            raise CoalcanError("INPUT-ERROR", f"map table not total, missing {missing[0]}")

    @classmethod
    def from_func(cls, pair, arity, fn, tonicity=None, name="f"):
        tab = {t: int(fn(*t)) for t in product(pair.sub, repeat=arity)}
        return cls(pair, arity, tab, tonicity, name)

    def __call__(self, *args):
        return self.table[tuple(args)]

    def dense(self):
        """numpy array indexed by positions in pair.sub."""
        S = self.pair.sub
        pos = {s: i for i, s in enumerate(S)}
        arr = np.empty((len(S),) * self.arity, dtype=np.int32)
        for t, v in self.table.items():
            arr[tuple(pos[x] for x in t)] = v
        return arr

    def check_tonicity(self):
        """Declared tonicity verified exhaustively; returns list of violations."""
        L = self.pair.ambient
        bad = []
        for i, ton in enumerate(self.tonicity):
            if ton == "none":
                continue
            for t in self.table:
                for y in self.pair.sub:
                    if L.le(t[i], y):
                        u = t[:i] + (y,) + t[i + 1:]
                        a, b = self.table[t], self.table[u]
                        if (ton == "iso" and not L.le(a, b)) or (ton == "anti" and not L.le(b, a)):
                            bad.append((i, t, u))
                            break
        return bad


def ambient_map(L, arity, fn, tonicity=None, name="f"):
    return MapTable.from_func(DenseCompactPair.full(L), arity, fn, tonicity, name)


# ---------------------------------------------------------- extensions

def sigma_pi_extension(f):
    """Return (f_sigma, f_pi) as dicts ambient^n -> ambient."""
    pair, n = f.pair, f.arity
    L = pair.ambient
    mt, jt, lt, _ = L.tables()
    S = np.array(pair.sub, dtype=np.int32)
    tuples = np.array(list(product(range(len(S)), repeat=n)), dtype=np.int32).reshape(-1, n)
    vals = f.dense()[tuple(tuples.T)] if n else np.array([f.table[()]])
    tup_amb = S[tuples] if n else tuples
    K = np.array(pair.K, dtype=np.int32)
    O = np.array(pair.O, dtype=np.int32)
    boxes = [(d, u) for d in product(K, repeat=n) for u in product(O, repeat=n)
             if all(lt[a, b] for a, b in zip(d, u))]
    M, J = [], []
    for d, u in boxes:
        mask = np.ones(len(tuples), dtype=bool)
        for i in range(n):
            mask &= lt[d[i], tup_amb[:, i]] & lt[tup_amb[:, i], u[i]]
        vs = set(int(v) for v in vals[mask])
        M.append(bigmeet(L, vs))
        J.append(bigjoin(L, vs))
    D = np.array([d for d, _ in boxes], dtype=np.int32).reshape(len(boxes), n)
    U = np.array([u for _, u in boxes], dtype=np.int32).reshape(len(boxes), n)
    M = np.array(M, dtype=np.int32)
    J = np.array(J, dtype=np.int32)
    fs, fp = {}, {}
    for x in product(range(L.n), repeat=n):
        sel = np.ones(len(boxes), dtype=bool)
        for i in range(n):
            sel &= lt[D[:, i], x[i]] & lt[x[i], U[:, i]]
        fs[x] = bigjoin(L, set(int(v) for v in M[sel]))
        fp[x] = bigmeet(L, set(int(v) for v in J[sel]))
    return fs, fp


def extension_maps(f):
    """The sigma and pi extensions wrapped as ambient MapTables."""
    fs, fp = sigma_pi_extension(f)
    full = DenseCompactPair.full(f.pair.ambient)
    return (MapTable(full, f.arity, fs, f.tonicity, f.name + "^s"),
            MapTable(full, f.arity, fp, f.tonicity, f.name + "^p"))


def is_smooth(f):
    fs, fp = sigma_pi_extension(f)
    return fs == fp


# ---------------------------------------------------------- properties

FLAG_NAMES = (
    "isotone", "antitone", "preserves-joins", "preserves-meets",
    "anti-preserves-joins", "anti-preserves-meets",
    "preserves-up-directed-joins", "preserves-down-directed-meets",
    "anti-preserves-up-directed-joins", "anti-preserves-down-directed-meets",
)


class PropertyProfile:
    """Per-argument property flags plus the unary-only shape flags."""

    def __init__(self, arity):
        self.arity = arity
        self.flags = [set() for _ in range(arity)]
        self.k_additive = [None] * arity
        self.k_multiplicative = [None] * arity
        self.anti_k_additive = [None] * arity
        self.anti_k_multiplicative = [None] * arity
        self.expanding = self.contracting = self.idempotent = None

    def has(self, flag, arg=None):
        args = range(self.arity) if arg is None else [arg]
        return all(flag in self.flags[i] for i in args)

    def as_lines(self):
        out = []
        for i in range(self.arity):
            out.append(f"ARG{i}: {' '.join(sorted(self.flags[i])) or '-'}")
            out.append(f"ARG{i}-K-ADDITIVE: {self.k_additive[i] or '-'}")
            out.append(f"ARG{i}-K-MULTIPLICATIVE: {self.k_multiplicative[i] or '-'}")
            out.append(f"ARG{i}-ANTI-K-ADDITIVE: {self.anti_k_additive[i] or '-'}")
            out.append(f"ARG{i}-ANTI-K-MULTIPLICATIVE: {self.anti_k_multiplicative[i] or '-'}")
        if self.arity == 1:
            out.append(f"EXPANDING: {yn(self.expanding)}")
            out.append(f"CONTRACTING: {yn(self.contracting)}")
            out.append(f"IDEMPOTENT: {yn(self.idempotent)}")
        return out


def yn(b):
    return "yes" if b else "no"


class _View:
    """Domain positions for a map: local order/meet/join on sub positions,
    values living in the ambient."""

    def __init__(self, L, dom):
        self.L = L
        mt, jt, lt, ng = L.tables()
        self.mt, self.jt, self.lt = mt, jt, lt
        self.dom = np.array(dom, dtype=np.int32)
        pos = {int(x): i for i, x in enumerate(dom)}
        d = len(dom)
        self.lmeet = np.array([[pos[int(mt[a, b])] for b in dom] for a in dom], dtype=np.int32).reshape(d, d)
        self.ljoin = np.array([[pos[int(jt[a, b])] for b in dom] for a in dom], dtype=np.int32).reshape(d, d)
        self.lle = lt[np.ix_(self.dom, self.dom)]
        self.lbot = pos[bigmeet(L, dom)] if d else None
        self.ltop = pos[bigjoin(L, dom)] if d else None
        self.d = d


def _arg_front(arr, i):
    a = np.moveaxis(arr, i, 0)
    return a.reshape(a.shape[0], -1)


def _directed_subsets(view, up=True):
    """All nonempty directed subsets of the domain (as position lists)."""
    cache = view.__dict__.setdefault("_directed", {})
    if up not in cache:
        cache[up] = _directed_subsets_raw(view, up)
    return cache[up]


def _directed_index(view, up):
    """Aggregates and membership masks of all directed subsets, as arrays."""
    cache = view.__dict__.setdefault("_directed_idx", {})
    if up not in cache:
        subs = _directed_subsets(view, up)
        agg = np.array([reduce(lambda a, b: view.ljoin[a, b] if up else view.lmeet[a, b], s)
                        for s in subs], dtype=np.int64)
        mask = np.zeros((len(subs), view.d), dtype=bool)
        for i, s in enumerate(subs):
            mask[i, list(s)] = True
        cache[up] = (agg, mask)
    return cache[up]


def _directed_subsets_raw(view, up):
    d = view.d
    out = []
    le = view.lle
    for r in range(1, d + 1):
        for s in combinations(range(d), r):
            ok = True
            for a in s:
                for b in s:
                    if up and not any(le[a, c] and le[b, c] for c in s):
                        ok = False
                    if not up and not any(le[c, a] and le[c, b] for c in s):
                        ok = False
                    if not ok:
                        break
                if not ok:
                    break
            if ok:
                out.append(s)
    return out


def _fold(tab, G):
    """Fold a binary table over axis 0 of G."""
    r = G[0]
    for k in range(1, G.shape[0]):
        r = tab[r, G[k]]
    return r


def _min_k(view, G, mode):
    """Least k with the (anti-)k-additive/multiplicative law, or None.

    G: (d, rest) values of the map along one argument.
    mode: 'add' f(vU)=v{f(vV)}, 'mul' f(^U)=^{f(^V)},
          'anti-add' f(vU)=^{f(vV)}, 'anti-mul' f(^U)=v{f(^V)}.
    """
    d = view.d
    if d == 0:
        return 1
    inner = view.ljoin if mode in ("add", "anti-add") else view.lmeet
    unit = view.lbot if mode in ("add", "anti-add") else view.ltop
    outer = view.jt if mode in ("add", "anti-mul") else view.mt
    nsub = 1 << d
    # position of the inner join/meet of each subset
    agg = np.empty(nsub, dtype=np.int32)
    agg[0] = unit
    size = np.zeros(nsub, dtype=np.int32)
    for m in range(1, nsub):
        low = (m & -m).bit_length() - 1
        agg[m] = inner[agg[m & (m - 1)], low]
        size[m] = size[m & (m - 1)] + 1
    fv = G[agg]                       # (nsub, rest)
    target = fv                       # f applied to the aggregate of U itself
    outer_unit = view.L.bot if outer is view.jt else view.L.top
    for k in range(1, d + 1):
        acc = np.where((size <= k)[:, None], fv, outer_unit).astype(np.int32)
        for b in range(d):
            idx = np.flatnonzero((np.arange(nsub) >> b) & 1)
            acc[idx] = outer[acc[idx], acc[idx ^ (1 << b)]]
        if np.array_equal(acc, target):
            return k
    return None


def detect_properties(f, flags=None, kinds=True):
    """Decide every property flag of a MapTable by exhaustive checks.

    ``flags`` restricts the per-argument flags computed (None = all);
    ``kinds`` toggles the k-additivity searches.
    """
    L = f.pair.ambient
    view = _View(L, f.pair.sub)
    arr = f.dense()
    return profile_from_array(view, arr, f.arity, flags, kinds)


def profile_from_array(view, arr, arity, flags=None, kinds=True):
    prof = PropertyProfile(arity)
    want = set(FLAG_NAMES if flags is None else flags)
    mt, jt, lt = view.mt, view.jt, view.lt
    le = view.lle
    for i in range(arity):
        G = _arg_front(arr, i)                # (d, rest)
        Gx, Gy = G[:, None, :], G[None, :, :]
        fl = prof.flags[i]
        lower = le[:, :, None]
        iso = bool(np.all(~lower | lt[Gx, Gy]))
        anti = bool(np.all(~lower | lt[Gy, Gx]))
        if iso:
            fl.add("isotone")
        if anti:
            fl.add("antitone")
        Gj = G[view.ljoin]                     # f(x v y)
        Gm = G[view.lmeet]                     # f(x ^ y)
        if "preserves-joins" in want and np.array_equal(Gj, jt[Gx, Gy]):
            fl.add("preserves-joins")
        if "preserves-meets" in want and np.array_equal(Gm, mt[Gx, Gy]):
            fl.add("preserves-meets")
        if "anti-preserves-joins" in want and np.array_equal(Gj, mt[Gx, Gy]):
            fl.add("anti-preserves-joins")
        if "anti-preserves-meets" in want and np.array_equal(Gm, jt[Gx, Gy]):
            fl.add("anti-preserves-meets")
        dir_flags = {"preserves-up-directed-joins", "preserves-down-directed-meets",
                     "anti-preserves-up-directed-joins", "anti-preserves-down-directed-meets"}
        if want & dir_flags:
            if view.d <= 10:
                for name, up, anti_law in (
                        ("preserves-up-directed-joins", True, False),
                        ("anti-preserves-up-directed-joins", True, True),
                        ("preserves-down-directed-meets", False, False),
                        ("anti-preserves-down-directed-meets", False, True)):
                    if name not in want:
                        continue
                    agg, mask = _directed_index(view, up)
                    lhs = G[agg]                                  # (nsets, rest)
                    use_join = up != anti_law
                    tab = jt if use_join else mt
                    rhs = np.full_like(lhs, view.L.bot if use_join else view.L.top)
                    for k in range(view.d):
                        rhs = np.where(mask[:, k:k + 1], tab[rhs, G[k][None, :]], rhs)
                    ok = bool(np.array_equal(lhs, rhs))
                    if ok:
                        fl.add(name)
            else:
                # finite directed sets have a greatest (least) member
                if iso:
                    fl |= {"preserves-up-directed-joins", "preserves-down-directed-meets"} & want
                if anti:
                    fl |= {"anti-preserves-up-directed-joins", "anti-preserves-down-directed-meets"} & want
        if kinds and view.d <= 12:
            prof.k_additive[i] = _min_k(view, G, "add")
            prof.k_multiplicative[i] = _min_k(view, G, "mul")
            prof.anti_k_additive[i] = _min_k(view, G, "anti-add")
            prof.anti_k_multiplicative[i] = _min_k(view, G, "anti-mul")
    if arity == 1:
        dom = view.dom
        prof.expanding = bool(np.all(lt[dom, arr]))
        prof.contracting = bool(np.all(lt[arr, dom]))
        pos = {int(x): k for k, x in enumerate(dom)}
        if all(int(v) in pos for v in arr):
            twice = arr[[pos[int(v)] for v in arr]]
            prof.idempotent = bool(np.array_equal(twice, arr))
        else:
            prof.idempotent = False
    return prof


# ---------------------------------------------------------- topologies

class TopologyFamily:
    def __init__(self, host, name, opens):
        self.host = host
        self.name = name
        self.opens = frozenset(opens)          # bitmasks over host indices
        full = (1 << host.n) - 1
        self.full = full

    def is_topology(self):
        if 0 not in self.opens or self.full not in self.opens:
            return False
        for a in self.opens:
            for b in self.opens:
                if a & b not in self.opens or a | b not in self.opens:
                    return False
        return True

    def neighbourhood(self, x):
        """Smallest open set containing x."""
        r = self.full
        for o in self.opens:
            if o >> x & 1:
                r &= o
        return r

    def as_sets(self):
        return sorted((frozenset(i for i in range(self.host.n) if o >> i & 1) for o in self.opens),
                      key=lambda s: (len(s), sorted(s)))

    def __le__(self, other):
        return self.opens <= other.opens

    def __len__(self):
        return len(self.opens)


def _generate(n, subbasis):
    full = (1 << n) - 1
    basis = {full}
    for s in subbasis:
        basis |= {b & s for b in basis} | {s}
    opens = {0}
    for b in basis:
        opens |= {o | b for o in opens}
    return opens


def _mask(idxs):
    r = 0
    for i in idxs:
        r |= 1 << i
    return r


def topologies(pair):
    L = pair.ambient
    n = L.n
    ups = [_mask(L.upset(k)) for k in pair.K]
    downs = [_mask(L.downset(o)) for o in pair.O]
    P = L.order()
    upsets = [_mask(L.index[e] for e in s) for s in P.upsets()]
    downsets = [_mask(L.index[e] for e in s) for s in P.downsets()]
    fams = {
        "sigma-up": _generate(n, ups),
        "sigma-down": _generate(n, downs),
        "sigma": _generate(n, ups + downs),
        "gamma-up": set(upsets),
        "gamma-down": set(downsets),
        "gamma": _generate(n, upsets + downsets),
    }
    out = {k: TopologyFamily(L, k, v) for k, v in fams.items()}
    for a, b in (("gamma-up", "sigma-up"), ("gamma-down", "sigma-down"), ("gamma", "sigma")):
        if not out[a] <= out[b]:
            out[a].inclusion_note = f"{a} not contained in {b}"
    return out


def is_continuous(f, froms, to):
    """Preimage of every open of ``to`` is open in the product of ``froms``.

    ``f`` is a MapTable over the full ambient (or any total dict on tuples).
    """
    table = f.table if hasattr(f, "table") else f
    nb = [[t.neighbourhood(x) for x in range(t.host.n)] for t in froms]
    for o in to.opens:
        pre = {x for x, v in table.items() if o >> v & 1}
        for x in pre:
            # the product neighbourhood of x must lie in the preimage
            coords = [[i for i in range(froms[k].host.n) if nb[k][x[k]] >> i & 1] for k in range(len(x))]
            for y in product(*coords):
                if y not in pre:
                    return False
    return True


def continuous_extensions(f, froms, to, budget=300000):
    """Every map on the ambient agreeing with f on sub^n and continuous for
    (froms, to); used to test uniqueness of (sigma, gamma) extensions."""
    L = f.pair.ambient
    dom = list(product(range(L.n), repeat=f.arity))
    free = [x for x in dom if x not in f.table]
    if L.n ** len(free) > budget:
        raise CoalcanError("BUDGET-EXCEEDED", "too many candidate extensions")
    out = []
    for vals in product(range(L.n), repeat=len(free)):
        tab = dict(f.table)
        tab.update(zip(free, vals))
        if is_continuous(tab, froms, to):
            out.append(tab)
    return out


# ------------------------------------------------------- composition

def compose(g, fs):
    """The map x -> g(f1(x), ..., fm(x)) on the common domain."""
    k = fs[0].arity
    pair = fs[0].pair
    tab = {x: g.table[tuple(f.table[x] for f in fs)] for x in product(pair.sub, repeat=k)}
    return MapTable(pair, k, tab, None, g.name + "o(" + ",".join(f.name for f in fs) + ")")


def compose_and_compare(g, fs):
    """Compare (g o f)^sigma with g^sigma o f^sigma and search for a matching
    family of topologies certifying equality."""
    for m in [g] + list(fs):
        if m.check_tonicity():
            raise CoalcanError("TONICITY-VIOLATION", f"{m.name} violates its declared tonicity")
    L = g.pair.ambient
    lt = L.tables()[2]
    h = compose(g, fs)
    hs, _ = sigma_pi_extension(h)
    gs, _ = sigma_pi_extension(g)
    fss = [sigma_pi_extension(f)[0] for f in fs]
    rhs = {x: gs[tuple(fsig[x] for fsig in fss)] for x in hs}
    leq = all(lt[hs[x], rhs[x]] for x in hs)
    eq = all(hs[x] == rhs[x] for x in hs)
    tops = topologies(DenseCompactPair.full(L))
    sig = topologies(g.pair)["sigma"]
    cert = None
    names = list(tops)
    for combo in product(names, repeat=len(fs)):
        if all(is_continuous(fss[i], [sig] * fs[i].arity, tops[combo[i]]) for i in range(len(fs))):
            if is_continuous(gs, [tops[c] for c in combo], tops["gamma"]):
                cert = combo
                break
    return {"leq": leq, "equal": eq, "certificate": cert}


# ---------------------------------------------------------- .map format

def parse_map(text, pair):
    L = pair.ambient
    arity, ton, rows = None, None, {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "arity":
            arity = int(toks[1])
        elif toks[0] == "tonicity":
            ton = toks[1:]
            if any(t not in TONICITIES for t in ton):
                raise CoalcanError("PARSE-ERROR", "tonicity must be iso, anti or none")
        elif toks[0] == "row":
            if "->" not in toks:
                raise CoalcanError("PARSE-ERROR", f"row without arrow: {line}")
            k = toks.index("->")
            try:
                args = tuple(L.index[a] for a in toks[1:k])
                rows[args] = L.index[toks[k + 1]]
            except KeyError as e:
                raise CoalcanError("PARSE-ERROR", f"unknown element {e}")
        else:
            raise CoalcanError("PARSE-ERROR", f"bad .map line: {line}")
    if arity is None:
        raise CoalcanError("PARSE-ERROR", "missing arity line")
    if ton is not None and len(ton) != arity:
        raise CoalcanError("PARSE-ERROR", "tonicity list length differs from arity")
    return MapTable(pair, arity, rows, ton)


def format_map(f, name=str):
    L = f.pair.ambient
    lines = [f"arity {f.arity}", "tonicity " + " ".join(f.tonicity)]
    for t in sorted(f.table):
        lines.append("row " + " ".join(name(L.id(a)) for a in t) + " -> " + name(L.id(f.table[t])))
    return "\n".join(lines) + "\n"
