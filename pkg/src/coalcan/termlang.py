"""Signatures, terms, term functions, the composition tables, polarity,
classification and Sahlqvist recognition.

Terms are nested tuples:

    ("var", name) ("top",) ("bot",) ("not", a) ("and", a, b) ("or", a, b)
    ("app", name, args) ("nabla", "set" | "tup", args)

Set-nabla arguments are kept deduplicated and sorted by their printed form,
so equal sets give equal tuples.
"""

import re
from functools import lru_cache
from importlib import resources
from itertools import product

import numpy as np

from .errors import CoalcanError

TOP = ("top",)
BOT = ("bot",)

PRES = ("le", "m", "j", "ddm", "udj")
ANTI = ("ge", "am", "aj", "addm", "audj")
CODES = PRES + ANTI
PRES_ALL = frozenset(PRES)
ALL_FLAGS = frozenset(CODES)

FLAG_LONG = {
    "le": "isotone", "ge": "antitone",
    "m": "preserves-meets", "j": "preserves-joins",
    "ddm": "preserves-down-directed-meets", "udj": "preserves-up-directed-joins",
    "am": "anti-preserves-meets", "aj": "anti-preserves-joins",
    "addm": "anti-preserves-down-directed-meets", "audj": "anti-preserves-up-directed-joins",
}

IMPLIES = {
    "m": {"le", "ddm"}, "j": {"le", "udj"}, "ddm": {"le"}, "udj": {"le"},
    "am": {"ge", "addm"}, "aj": {"ge", "audj"}, "addm": {"ge"}, "audj": {"ge"},
}


def close_flags(fs):
    out = set(fs)
    todo = list(out)
    while todo:
        f = todo.pop()
        for g in IMPLIES.get(f, ()):
            if g not in out:
                out.add(g)
                todo.append(g)
    return frozenset(out)


# ------------------------------------------------------------ tables

def tables_text():
    return resources.files("coalcan").joinpath("data/tables.txt").read_text()


@lru_cache(maxsize=None)
def load_tables():
    """Return (S_printed, P_printed, P_corrected, corrections)."""
    S, P, corr = {}, {}, []
    cols = None
    cur = None
    for raw in tables_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "columns":
            cols = toks[1:]
        elif toks[0] == "table":
            cur = S if toks[1] == "S" else P
        elif toks[0] == "CORRECTIONS":
            cur = "corr"
        elif cur == "corr":
            corr.append(tuple(toks))
        else:
            row = toks[0]
            for c, v in zip(cols, toks[1:]):
                cur[(row, c)] = (v == "Y") if cur is S else v
    Pc = dict(P)
    for tab, row, col, val in corr:
        if tab == "P":
            Pc[(row, col)] = val
    return S, P, Pc, corr


def table_stable(g, f):
    return load_tables()[0][(g, f)]


def table_property(g, f, corrected=True):
    t = load_tables()
    return (t[2] if corrected else t[1])[(g, f)]


# ---------------------------------------------------------- signatures

LAWS = ("join-law", "meet-law", "none")
BASE_FLAGS = {
    "and": (frozenset({"le", "m", "j", "ddm", "udj"}),) * 2,
    "or": (frozenset({"le", "m", "j", "ddm", "udj"}),) * 2,
    "not": (frozenset({"ge", "am", "aj", "addm", "audj"}),),
}


class Symbol:
    def __init__(self, name, arity, tonicity=None, flags=None, law="none", dual=None):
        self.name = name
        self.arity = arity
        self.tonicity = list(tonicity or ["none"] * arity)
        fl = [set(x) for x in (flags or [()] * arity)]
        for i, t in enumerate(self.tonicity):
            if t == "iso":
                fl[i].add("le")
            elif t == "anti":
                fl[i].add("ge")
        self.flags = [close_flags(x) for x in fl]
        self.law = law
        self.dual = dual
        for i, fs in enumerate(self.flags):
            if fs & set(PRES) and fs & set(ANTI):
                raise CoalcanError("INPUT-ERROR", f"{name} arg {i} is both isotone and antitone")
            if fs & set(PRES) and self.tonicity[i] == "anti" or fs & set(ANTI) and self.tonicity[i] == "iso":
                raise CoalcanError("INPUT-ERROR", f"{name} arg {i} flags contradict its tonicity")
            if fs and self.tonicity[i] == "none":
                self.tonicity[i] = "iso" if fs & set(PRES) else "anti"

    def __repr__(self):
        return f"Symbol({self.name}/{self.arity})"


class Signature:
    def __init__(self, base, symbols=(), nabla=None, nabla_flags=("j", "m"), name="sig"):
        if base not in ("DL", "BDL", "BA"):
            raise CoalcanError("INPUT-ERROR", f"unknown base {base}")
        self.base = base
        self.symbols = {}
        for s in symbols:
            if s.name in self.symbols:
                raise CoalcanError("INPUT-ERROR", f"duplicate symbol {s.name}")
            self.symbols[s.name] = s
        self.nabla = nabla                  # None, "set", "tup" or "both"
        self.nabla_flags = close_flags(set(nabla_flags) | {"le"}) if nabla_flags else frozenset()
        self.name = name

    def get(self, name):
        return self.symbols.get(name)

    def with_symbol(self, sym):
        return Signature(self.base, list(self.symbols.values()) + [sym], self.nabla,
                         tuple(self.nabla_flags), self.name)

    def arg_flags(self, t, i):
        if t[0] == "app":
            return self.symbols[t[1]].flags[i]
        if t[0] == "nabla":
            return self.nabla_flags if t[1] == "tup" else frozenset()
        return BASE_FLAGS[t[0]][i]

    def arg_tonicity(self, t, i):
        if t[0] == "app":
            return self.symbols[t[1]].tonicity[i]
        if t[0] == "nabla":
            return "iso" if (t[1] == "tup" and self.nabla_flags) else "none"
        return "anti" if t[0] == "not" else "iso"


def classical_sig():
    return Signature("BA", [
        Symbol("dia", 1, ["iso"], [{"j"}], "join-law", dual="box"),
        Symbol("box", 1, ["iso"], [{"m"}], "meet-law", dual="dia"),
    ], name="classical")


def gml_sig(n, prefix="k"):
    syms = []
    for k in range(1, n + 1):
        syms.append(Symbol(f"{prefix}{k}", 1, ["iso"], [{"j"} if k == 1 else {"udj"}], "none"))
    return Signature("BA", syms, name="gml")


def gml_dl_sig(n):
    """Two families of graded operators: children and grandchildren."""
    syms = gml_sig(n, "child").symbols.values()
    syms = list(syms) + list(gml_sig(n, "gchild").symbols.values())
    return Signature("BA", syms, name="gml")


def heyting_sig():
    return Signature("BDL", [Symbol("imp", 2, ["anti", "iso"], [{"aj"}, {"m"}], "meet-law")], name="heyting")


def lambek_sig():
    return Signature("DL", [
        Symbol("I", 0, [], [], "join-law"),
        Symbol("mul", 2, ["iso", "iso"], [{"j"}, {"j"}], "join-law"),
        Symbol("ldiv", 2, ["anti", "iso"], [{"aj"}, {"m"}], "meet-law"),
        Symbol("rdiv", 2, ["iso", "anti"], [{"m"}, {"aj"}], "meet-law"),
    ], name="lambek")


def nabla_sig(kind="set"):
    """BA signature with nabla terms; tuple nabla preserves meets and joins
    in every argument, set nabla carries no annotation."""
    return Signature("BA", [], nabla=kind, name=f"nabla-{kind}")


BUILTIN_SIGS = {
    "classical": classical_sig,
    "gml": lambda: gml_sig(4),
    "gml-dl": lambda: gml_dl_sig(4),
    "heyting": heyting_sig,
    "lambek": lambek_sig,
    "nabla-set": lambda: nabla_sig("set"),
    "nabla-tup": lambda: nabla_sig("tup"),
    "nabla-both": lambda: nabla_sig("both"),
}

FLAG_CODES = set(CODES)


def parse_sig(text):
    """``.sig`` format: ``base BA|BDL|DL``, optional ``nabla set|tup|both``,
    ``sym <name> <arity> <tonicity-list> <flag-list> <law>`` and
    ``dual <a> <b>`` lines.  Lists are comma separated per argument; several
    flags for one argument are joined with ``+``; ``-`` means none."""
    base, nabla, syms, duals = "BA", None, [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "base" and len(toks) == 2:
            base = toks[1]
        elif toks[0] == "nabla" and len(toks) == 2:
            nabla = toks[1]
        elif toks[0] == "dual" and len(toks) == 3:
            duals.append((toks[1], toks[2]))
        elif toks[0] == "sym" and len(toks) in (4, 5, 6):
            name, arity = toks[1], int(toks[2])
            if arity == 0:
                ton, fl = [], []
                law = toks[-1] if len(toks) > 3 else "none"
            else:
                if len(toks) != 6:
                    raise CoalcanError("PARSE-ERROR", f"bad sym line: {line}")
                ton = toks[3].split(",")
                fl = [set() if x == "-" else set(x.split("+")) for x in toks[4].split(",")]
                law = toks[5]
                if len(ton) != arity or len(fl) != arity:
                    raise CoalcanError("PARSE-ERROR", f"list length mismatch for {name}")
                for fs in fl:
                    if fs - FLAG_CODES:
                        raise CoalcanError("PARSE-ERROR", f"unknown flag {sorted(fs - FLAG_CODES)}")
            if law not in LAWS:
                raise CoalcanError("PARSE-ERROR", f"unknown law {law}")
            syms.append(Symbol(name, arity, ton, fl, law))
        else:
            raise CoalcanError("PARSE-ERROR", f"bad .sig line: {line}")
    sig = Signature(base, syms, nabla=nabla)
    for a, b in duals:
        if a not in sig.symbols or b not in sig.symbols:
            raise CoalcanError("PARSE-ERROR", f"dual of unknown symbol {a} {b}")
        sig.symbols[a].dual = b
        sig.symbols[b].dual = a
    return sig


def format_sig(sig):
    lines = [f"base {sig.base}"]
    if sig.nabla:
        lines.append(f"nabla {sig.nabla}")
    for s in sig.symbols.values():
        if s.arity == 0:
            lines.append(f"sym {s.name} 0 {s.law}")
            continue
        fl = []
        for fs in s.flags:
            core = sorted(fs - {"le", "ge"}) or sorted(fs) or ["-"]
            fl.append("+".join(core))
        lines.append(f"sym {s.name} {s.arity} {','.join(s.tonicity)} {','.join(fl)} {s.law}")
    done = set()
    for s in sig.symbols.values():
        if s.dual and (s.dual, s.name) not in done:
            lines.append(f"dual {s.name} {s.dual}")
            done.add((s.name, s.dual))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- parsing

TOKEN = re.compile(r"\s*(?:(->|<=|[=!&|(){},])|([A-Za-z_][A-Za-z0-9_]*))")
VAR = re.compile(r"[a-z][a-z0-9]*\Z")


def tokenize(text):
    toks, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise CoalcanError("PARSE-ERROR", f"unexpected character at {pos}", pos=pos)
        toks.append((m.group(1) or m.group(2), m.start(m.lastindex)))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, text, sig):
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig
        self.text = text

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j][0] if j < len(self.toks) else None

    def pos(self):
        return self.toks[self.i][1] if self.i < len(self.toks) else len(self.text)

    def take(self, want=None):
        if self.i >= len(self.toks):
            raise CoalcanError("PARSE-ERROR", f"unexpected end of input, expected {want or 'a term'}",
                               pos=len(self.text))
        tok = self.toks[self.i][0]
        if want is not None and tok != want:
            raise CoalcanError("PARSE-ERROR", f"expected {want!r} at {self.pos()}, found {tok!r}",
                               pos=self.pos())
        self.i += 1
        return tok

    def expr(self):
        left = self.disj()
        if self.peek() == "->":
            p = self.pos()
            self.take()
            right = self.expr()
            if self.sig is not None and self.sig.base != "BA":
                raise CoalcanError("NEGATION-IN-POSITIVE-BASE", f"'->' needs a BA base (at {p})", pos=p)
            return ("or", ("not", left), right)
        return left

    def disj(self):
        t = self.conj()
        while self.peek() == "|":
            self.take()
            t = ("or", t, self.conj())
        return t

    def conj(self):
        t = self.unary()
        while self.peek() == "&":
            self.take()
            t = ("and", t, self.unary())
        return t

    def unary(self):
        if self.peek() == "!":
            p = self.pos()
            self.take()
            if self.sig is not None and self.sig.base != "BA":
                raise CoalcanError("NEGATION-IN-POSITIVE-BASE", f"negation over base {self.sig.base} (at {p})",
                                   pos=p)
            return ("not", self.unary())
        return self.atom()

    def args(self, close):
        out = []
        if self.peek() == close:
            self.take()
            return out
        while True:
            out.append(self.expr())
            if self.peek() == ",":
                self.take()
                continue
            self.take(close)
            return out

    def atom(self):
        tok = self.peek()
        p = self.pos()
        if tok == "(":
            self.take()
            t = self.expr()
            self.take(")")
            return t
        if tok is None or not re.match(r"[A-Za-z_]", tok):
            raise CoalcanError("PARSE-ERROR", f"unexpected token {tok!r} at {p}", pos=p)
        self.take()
        if tok == "bot":
            return BOT
        if tok == "top":
            return TOP
        if tok == "nabla" and self.peek() in ("{", "("):
            opener = self.take()
            close = "}" if opener == "{" else ")"
            kind = "set" if opener == "{" else "tup"
            if self.sig is not None and self.sig.nabla not in (kind, "both"):
                raise CoalcanError("ARITY-ERROR", f"signature has no {kind} nabla (at {p})", pos=p)
            return mk_nabla(kind, self.args(close))
        if self.peek() == "(":
            self.take()
            args = self.args(")")
            if self.sig is not None:
                sym = self.sig.get(tok)
                if sym is None:
                    raise CoalcanError("ARITY-ERROR", f"unknown symbol {tok} at {p}", pos=p)
                if sym.arity != len(args):
                    raise CoalcanError("ARITY-ERROR", f"{tok} expects {sym.arity} arguments, got {len(args)}",
                                       pos=p)
            return ("app", tok, tuple(args))
        if self.sig is not None and tok in self.sig.symbols and self.sig.symbols[tok].arity == 0:
            return ("app", tok, ())
        if not VAR.match(tok):
            raise CoalcanError("PARSE-ERROR", f"bad variable name {tok!r} at {p}", pos=p)
        return ("var", tok)


def parse_term(text, sig=None):
    p = _Parser(text, sig)
    t = p.expr()
    if p.i != len(p.toks):
        raise CoalcanError("PARSE-ERROR", f"trailing input at {p.pos()}", pos=p.pos())
    return t


class Equation:
    def __init__(self, lhs, rel, rhs):
        if rel not in ("=", "<="):
            raise CoalcanError("INPUT-ERROR", f"bad relation {rel}")
        self.lhs, self.rel, self.rhs = lhs, rel, rhs

    def __repr__(self):
        return f"{show(self.lhs)} {self.rel} {show(self.rhs)}"

    def __eq__(self, o):
        return isinstance(o, Equation) and (self.lhs, self.rel, self.rhs) == (o.lhs, o.rel, o.rhs)

    def __hash__(self):
        return hash((self.lhs, self.rel, self.rhs))


def parse_equation(text, sig=None):
    """``s = t``, ``s <= t`` or a bare term (read as ``t = top``)."""
    p = _Parser(text, sig)
    lhs = p.expr()
    if p.i == len(p.toks):
        return Equation(lhs, "=", TOP)
    rel = p.take()
    if rel not in ("=", "<="):
        raise CoalcanError("PARSE-ERROR", f"expected '=' or '<=' at {p.toks[p.i - 1][1]}")
    rhs = p.expr()
    if p.i != len(p.toks):
        raise CoalcanError("PARSE-ERROR", f"trailing input at {p.pos()}", pos=p.pos())
    return Equation(lhs, rel, rhs)


# --------------------------------------------------------------- printing

def show(t):
    return _show(t, 0)


def _show(t, prec):
    tag = t[0]
    if tag == "var":
        return t[1]
    if tag in ("top", "bot"):
        return tag
    if tag == "not":
        return "!" + _show(t[1], 3)
    if tag == "and":
        s = _show(t[1], 2) + " & " + _show(t[2], 3)
        return f"({s})" if prec > 2 else s
    if tag == "or":
        s = _show(t[1], 1) + " | " + _show(t[2], 2)
        return f"({s})" if prec > 1 else s
    if tag == "app":
        if not t[2]:
            return t[1]
        return t[1] + "(" + ", ".join(_show(a, 0) for a in t[2]) + ")"
    if tag == "nabla":
        o, c = ("{", "}") if t[1] == "set" else ("(", ")")
        return "nabla" + o + ", ".join(_show(a, 0) for a in t[2]) + c
    raise CoalcanError("INPUT-ERROR", f"not a term: {t!r}")


def mk_nabla(kind, args):
    args = tuple(args)
    if kind == "set":
        uniq = {show(a): a for a in args}
        args = tuple(uniq[k] for k in sorted(uniq))
    return ("nabla", kind, args)


def var(name):
    return ("var", name)


def neg(a):
    return ("not", a)


def conj(*ts):
    if not ts:
        return TOP
    out = ts[0]
    for t in ts[1:]:
        out = ("and", out, t)
    return out


def disj(*ts):
    if not ts:
        return BOT
    out = ts[0]
    for t in ts[1:]:
        out = ("or", out, t)
    return out


def app(name, *args):
    return ("app", name, tuple(args))


def children(t):
    tag = t[0]
    if tag in ("not",):
        return (t[1],)
    if tag in ("and", "or"):
        return (t[1], t[2])
    if tag in ("app", "nabla"):
        return t[2]
    return ()


def variables(t):
    out = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if s[0] == "var":
            out.add(s[1])
        stack.extend(children(s))
    return out


def depth(t):
    """Modal depth: nesting of symbol applications and nablas."""
    if t[0] in ("app", "nabla"):
        return 1 + max((depth(a) for a in t[2]), default=0)
    return max((depth(a) for a in children(t)), default=0)


def size(t):
    return 1 + sum(size(a) for a in children(t))


def substitute(t, sub):
    tag = t[0]
    if tag == "var":
        return sub.get(t[1], t)
    if tag in ("top", "bot"):
        return t
    if tag == "not":
        return ("not", substitute(t[1], sub))
    if tag in ("and", "or"):
        return (tag, substitute(t[1], sub), substitute(t[2], sub))
    if tag == "app":
        return ("app", t[1], tuple(substitute(a, sub) for a in t[2]))
    if tag == "nabla":
        return mk_nabla(t[1], [substitute(a, sub) for a in t[2]])
    raise CoalcanError("INPUT-ERROR", f"not a term: {t!r}")


def check_term(t, sig):
    """Arity and base checks for terms built programmatically."""
    tag = t[0]
    if tag == "not" and sig.base != "BA":
        raise CoalcanError("NEGATION-IN-POSITIVE-BASE", "negation over a lattice base")
    if tag == "app":
        s = sig.get(t[1])
        if s is None or s.arity != len(t[2]):
            raise CoalcanError("ARITY-ERROR", f"bad application of {t[1]}")
    if tag == "nabla" and sig.nabla not in (t[1], "both"):
        raise CoalcanError("ARITY-ERROR", f"signature has no {t[1]} nabla")
    for c in children(t):
        check_term(c, sig)


# ------------------------------------------------------- term functions

class ExpandedAlgebra:
    """A finite lattice with one dense numpy table per symbol.

    ``nabla`` is an optional callable (kind, tuple of values) -> value used
    for nabla terms.
    """

    def __init__(self, lattice, ops=None, nabla=None):
        self.L = lattice
        self.ops = {}
        for name, tab in (ops or {}).items():
            self.ops[name] = np.asarray(tab, dtype=np.int32)
        self.nabla = nabla

    def op_table(self, name):
        if name not in self.ops:
            raise CoalcanError("MISSING-INTERPRETATION", f"no interpretation for {name}")
        return self.ops[name]

    def eval(self, t, env):
        """Value of t under env: variable -> element index."""
        L = self.L
        tag = t[0]
        if tag == "var":
            return env[t[1]]
        if tag == "top":
            return L.top
        if tag == "bot":
            return L.bot
        if tag == "not":
            return L.neg(self.eval(t[1], env))
        if tag == "and":
            return L.meet(self.eval(t[1], env), self.eval(t[2], env))
        if tag == "or":
            return L.join(self.eval(t[1], env), self.eval(t[2], env))
        if tag == "app":
            tab = self.op_table(t[1])
            return int(tab[tuple(self.eval(a, env) for a in t[2])])
        if tag == "nabla":
            if self.nabla is None:
                raise CoalcanError("MISSING-INTERPRETATION", "no interpretation for nabla")
            return self.nabla(t[1], tuple(self.eval(a, env) for a in t[2]))
        raise CoalcanError("INPUT-ERROR", f"not a term: {t!r}")

    def grid(self, t, vs):
        """Vectorized evaluation over all assignments to the variable list."""
        L = self.L
        n = L.n
        mt, jt, _, ng = L.tables()
        k = len(vs)
        shape = (n,) * k
        cache = {}

        def go(s):
            if s in cache:
                return cache[s]
            tag = s[0]
            if tag == "var":
                i = vs.index(s[1])
                r = np.broadcast_to(np.arange(n, dtype=np.int32).reshape(
                    [n if j == i else 1 for j in range(k)]), shape)
            elif tag == "top":
                r = np.full(shape, L.top, dtype=np.int32)
            elif tag == "bot":
                r = np.full(shape, L.bot, dtype=np.int32)
            elif tag == "not":
                if ng is None:
                    raise CoalcanError("MISSING-INTERPRETATION", "negation on a lattice without complement")
                r = ng[go(s[1])]
            elif tag == "and":
                r = mt[go(s[1]), go(s[2])]
            elif tag == "or":
                r = jt[go(s[1]), go(s[2])]
            elif tag == "app":
                tab = self.op_table(s[1])
                if not s[2]:
                    r = np.full(shape, int(tab), dtype=np.int32)
                else:
                    r = tab[tuple(go(a) for a in s[2])]
            elif tag == "nabla":
                if self.nabla is None:
                    raise CoalcanError("MISSING-INTERPRETATION", "no interpretation for nabla")
                argv = [np.broadcast_to(go(a), shape) for a in s[2]]
                r = np.empty(shape, dtype=np.int32)
                for idx in np.ndindex(*shape) if k else [()]:
                    r[idx] = self.nabla(s[1], tuple(int(a[idx]) for a in argv))
            else:
                raise CoalcanError("INPUT-ERROR", f"not a term: {s!r}")
            r = np.asarray(r, dtype=np.int32)
            cache[s] = r
            return r

        return np.broadcast_to(go(t), shape)

    def validates(self, eq, vs=None):
        vs = sorted(variables(eq.lhs) | variables(eq.rhs)) if vs is None else vs
        a = self.grid(eq.lhs, vs)
        b = self.grid(eq.rhs, vs)
        if eq.rel == "=":
            return bool(np.array_equal(a, b))
        lt = self.L.tables()[2]
        return bool(np.all(lt[a, b]))

    def counterexample(self, eq, vs=None):
        vs = sorted(variables(eq.lhs) | variables(eq.rhs)) if vs is None else vs
        a = self.grid(eq.lhs, vs)
        b = self.grid(eq.rhs, vs)
        bad = (a != b) if eq.rel == "=" else ~self.L.tables()[2][a, b]
        idx = np.argwhere(bad)
        if len(idx) == 0:
            return None
        return dict(zip(vs, (int(x) for x in idx[0])))


def term_function(t, A, vs=None):
    """The table of t over A as an ambient MapTable in the given variables."""
    from .canext import DenseCompactPair, MapTable
    vs = sorted(variables(t)) if vs is None else list(vs)
    arr = A.grid(t, vs)
    pair = DenseCompactPair.full(A.L)
    tab = {idx: int(arr[idx]) for idx in np.ndindex(*arr.shape)} if vs else {(): int(arr)}
    return MapTable(pair, len(vs), tab, None, show(t))


def algebra_validates(A, s, t):
    return A.validates(Equation(s, "=", t))


# ---------------------------------------------------------------- polarity

def _occurrences(t, sig, parity=0, out=None):
    """Map var -> set of parities (0 even, 1 odd, 'x' under a none slot)."""
    out = {} if out is None else out
    tag = t[0]
    if tag == "var":
        out.setdefault(t[1], set()).add(parity)
        return out
    for i, c in enumerate(children(t)):
        if tag == "not":
            p = 1 - parity if parity in (0, 1) else parity
        elif tag in ("and", "or"):
            p = parity
        else:
            ton = sig.arg_tonicity(t, i) if sig is not None else "iso"
            if ton == "iso":
                p = parity
            elif ton == "anti":
                p = 1 - parity if parity in (0, 1) else parity
            else:
                p = "x"
        _occurrences(c, sig, p, out)
    return out


def polarity(t, p, sig=None):
    occ = _occurrences(t, sig).get(p, set())
    if "x" in occ or occ == {0, 1}:
        return "mixed"
    if occ == {1}:
        return "negative"
    return "positive"


def is_positive(t, sig=None):
    return all(polarity(t, v, sig) == "positive" for v in variables(t))


def is_negative(t, sig=None):
    return all(polarity(t, v, sig) == "negative" for v in variables(t))


def uses_only_isotone(t, sig):
    """Built from variables, constants, meets, joins and isotone operations."""
    tag = t[0]
    if tag == "not":
        return False
    if tag == "app":
        if any(x != "iso" for x in sig.symbols[t[1]].tonicity):
            return False
    if tag == "nabla" and not (t[1] == "tup" and sig.nabla_flags):
        return False
    return all(uses_only_isotone(c, sig) for c in children(t))


def is_strictly_positive(t, sig):
    """Built from variables, constants, meets, joins and join-preserving (or
    up-directed-join-preserving) operations."""
    tag = t[0]
    if tag == "not":
        return False
    if tag in ("app", "nabla"):
        for i in range(len(t[2])):
            if "udj" not in sig.arg_flags(t, i):
                return False
    return all(is_strictly_positive(c, sig) for c in children(t))


# ---------------------------------------------------------- classification

class Classification:
    def __init__(self, stability, props, conservative, syntactic, stable_flag,
                 expanding=False, contracting=False):
        self.stability = stability
        self.expanding = expanding or stable_flag
        self.contracting = contracting or stable_flag
        self.props = props               # var -> frozenset of flag codes
        self.conservative = conservative
        self.syntactic = syntactic
        self.stable = stable_flag

    @property
    def property(self):
        """Flags holding in every variable (constants: all)."""
        if not self.props:
            return ALL_FLAGS
        out = None
        for fs in self.props.values():
            out = set(fs) if out is None else out & fs
        return frozenset(out)

    def main_property(self):
        p = self.property
        for code in ("j", "m", "aj", "am", "udj", "ddm", "audj", "addm", "le", "ge"):
            if code in p:
                return FLAG_LONG[code]
        return "none"

    def as_lines(self):
        lines = [f"STABILITY: {self.stability}",
                 f"PROPERTY: {self.main_property()}",
                 f"EXPANDING: {'yes' if self.expanding else 'no'}",
                 f"CONTRACTING: {'yes' if self.contracting else 'no'}",
                 f"CONSERVATIVE: {'yes' if self.conservative else 'no'}",
                 f"SYNTACTIC: {self.syntactic}"]
        for v in sorted(self.props):
            lines.append(f"FLAGS[{v}]: {' '.join(FLAG_LONG[c] for c in CODES if c in self.props[v]) or '-'}")
        return lines


def _aggregate(props):
    if not props:
        return ALL_FLAGS
    out = None
    for fs in props.values():
        out = set(fs) if out is None else out & fs
    return frozenset(out)


JOINT = {"and": {"m", "ddm", "aj", "audj"}, "or": {"j", "udj", "am", "addm"}}


def _compose_flags(gs, fs):
    out = set()
    for g in gs:
        for f in fs:
            out.add(table_property(g, f))
    return close_flags(out)


def _classify(t, sig, memo):
    if t in memo:
        return memo[t]
    tag = t[0]
    if tag == "var":
        res = (True, {t[1]: PRES_ALL})
    elif tag in ("top", "bot"):
        res = (True, {})
    else:
        kids = children(t)
        sub = [_classify(c, sig, memo) for c in kids]
        stable = True
        shared = {}
        for i, (_, pr) in enumerate(sub):
            for v in pr:
                shared.setdefault(v, []).append(i)
        monotone_all = True
        for i, (s_i, pr) in enumerate(sub):
            ton = sig.arg_tonicity(t, i)
            if ton == "none":
                monotone_all = False
            if not s_i:
                stable = False
                continue
            if kids[i][0] == "var":
                continue
            f_flags = sig.arg_flags(t, i)
            # the table is consulted per variable: an n-ary inner term is
            # stable in each argument with that argument's own property
            for g_flags in pr.values():
                if not any(table_stable(g, f) for g in g_flags for f in f_flags):
                    stable = False
        if any(len(ix) > 1 for ix in shared.values()):
            # a variable feeding several slots goes through the diagonal,
            # which only commutes with extension for monotone slots
            if not monotone_all or any(not _all_monotone(kids[i], sig) for i in range(len(kids))):
                stable = False
        props = {}
        for v, ix in shared.items():
            per = [_compose_flags(sub[i][1][v], sig.arg_flags(t, i)) for i in ix]
            if len(per) == 1:
                props[v] = per[0]
                continue
            joint = set()
            if tag in JOINT:
                joint = {c for c in JOINT[tag] if all(c in p for p in per)}
            if all("le" in p for p in per):
                joint.add("le")
            if all("ge" in p for p in per):
                joint.add("ge")
            props[v] = close_flags(joint)
        res = (stable, props)
    memo[t] = res
    return res


def _all_monotone(t, sig):
    for i, c in enumerate(children(t)):
        if t[0] in ("app", "nabla") and sig.arg_tonicity(t, i) == "none":
            return False
        if not _all_monotone(c, sig):
            return False
    return True


def classify(t, sig):
    stable, props = _classify(t, sig, {})
    # the stability field reports the table verdict only; the positive-term
    # route is recorded separately as the expanding flag
    stability = "stable" if stable else "unknown"
    expanding = stable or (uses_only_isotone(t, sig) and is_positive(t, sig))
    agg = _aggregate(props)
    conservative = stable and "udj" in agg
    if is_strictly_positive(t, sig):
        syn = "strictly-positive"
    elif is_positive(t, sig):
        syn = "positive"
    elif is_negative(t, sig):
        syn = "negative"
    else:
        syn = "mixed"
    return Classification(stability, props, conservative, syn, stable, expanding, stable)


# --------------------------------------------------------------- NNF

def nnf(t, sig, negate=False):
    """Push negations to variables, dualizing symbols that declare a dual.
    Negated applications without a dual stay as ("not", app)."""
    tag = t[0]
    if tag == "var":
        return ("not", t) if negate else t
    if tag == "top":
        return BOT if negate else TOP
    if tag == "bot":
        return TOP if negate else BOT
    if tag == "not":
        return nnf(t[1], sig, not negate)
    if tag in ("and", "or"):
        op = tag if not negate else ("or" if tag == "and" else "and")
        return (op, nnf(t[1], sig, negate), nnf(t[2], sig, negate))
    if tag == "app":
        sym = sig.get(t[1])
        if negate and sym is not None and sym.dual:
            return ("app", sym.dual, tuple(nnf(a, sig, True) for a in t[2]))
        inner = ("app", t[1], tuple(nnf(a, sig, False) for a in t[2]))
        return ("not", inner) if negate else inner
    if tag == "nabla":
        inner = mk_nabla(t[1], [nnf(a, sig, False) for a in t[2]])
        return ("not", inner) if negate else inner
    raise CoalcanError("INPUT-ERROR", f"not a term: {t!r}")


# ---------------------------------------------------------------- Sahlqvist

DIALECTS = ("abstract", "classical", "general", "gml", "substructural")


class SahlqvistVerdict:
    def __init__(self, accepted, dialect, route, decomposition, reason=""):
        self.accepted = accepted
        self.dialect = dialect
        self.route = route
        self.decomposition = decomposition     # list of (role, term)
        self.reason = reason

    def as_lines(self):
        lines = [f"DIALECT: {self.dialect}",
                 f"VERDICT: {'sahlqvist' if self.accepted else 'no decomposition found'}",
                 f"ROUTE: {self.route}"]
        for role, term in self.decomposition:
            lines.append(f"{role.upper()}: {show(term)}")
        if self.reason:
            lines.append(f"REASON: {self.reason}")
        return lines


def _dialect_ok(sig, dialect):
    if dialect not in DIALECTS:
        return False
    if dialect in ("classical", "general", "gml"):
        if sig.base != "BA":
            return False
    if dialect == "classical":
        return all(s.arity == 1 and (s.flags[0] & {"j", "m"}) for s in sig.symbols.values()) and not sig.nabla
    if dialect == "gml":
        return all(s.arity == 1 and "udj" in s.flags[0] for s in sig.symbols.values()
                   if not s.dual) and not sig.nabla
    if dialect == "substructural":
        return sig.base in ("DL", "BDL")
    return True


def _nested_boxes(t, sig):
    while t[0] == "app":
        sym = sig.symbols[t[1]]
        if sym.arity != 1 or "m" not in sym.flags[0]:
            return False
        t = t[2][0]
    return t[0] in ("var", "top", "bot")


def _is_u_leaf(t, sig):
    """t is the negation of a positive term over the isotone sub-signature."""
    if sig.base != "BA":
        return False
    u = nnf(t, sig, True)
    return uses_only_isotone(u, sig)


def _s_context_ok(t, sig, dialect):
    """Top constructor may appear inside the conservative term s."""
    tag = t[0]
    if tag in ("and", "or"):
        return True
    if tag in ("app", "nabla"):
        flags = [sig.arg_flags(t, i) for i in range(len(t[2]))]
        if dialect == "classical":
            return tag == "app" and all("j" in f for f in flags)
        return all("udj" in f for f in flags)
    return False


def _decompose(t, sig, dialect, budget):
    """Return a list of (role, leaf) or None."""
    if dialect == "classical":
        if _nested_boxes(t, sig):
            return [("t", t)]
    elif dialect == "substructural":
        if uses_only_isotone(t, sig):
            return [("u", t)]
        if classify(t, sig).stable:
            return [("t", t)]
    else:
        if classify(t, sig).stable:
            return [("t", t)]
    if dialect != "substructural" and _is_u_leaf(t, sig):
        return [("neg-u", t)]
    if budget <= 0 or not _s_context_ok(t, sig, dialect):
        return None
    out = []
    for c in children(t):
        d = _decompose(c, sig, dialect, budget - 1)
        if d is None:
            return None
        out.extend(d)
    return out


def bottom_forms(eq, sig):
    """Rewrite an (in)equation as terms that must equal bot (BA bases)."""
    l, r = eq.lhs, eq.rhs
    if eq.rel == "<=":
        if r == BOT:
            return [l]
        if l == TOP:
            return [("not", r)]
        return [("and", l, ("not", r))]
    if r == BOT:
        return [l]
    if l == BOT:
        return [r]
    if r == TOP:
        return [("not", l)]
    if l == TOP:
        return [("not", r)]
    return [("and", l, ("not", r)), ("and", r, ("not", l))]


def _canonical_inequality(eq, sig):
    """Stable = stable, or contracting <= expanding."""
    a, b = classify(eq.lhs, sig), classify(eq.rhs, sig)
    if eq.rel == "=":
        if a.stable and b.stable:
            return "stable-equation", [("stable", eq.lhs), ("stable", eq.rhs)]
        r1 = _canonical_inequality(Equation(eq.lhs, "<=", eq.rhs), sig)
        r2 = _canonical_inequality(Equation(eq.rhs, "<=", eq.lhs), sig)
        if r1 and r2:
            return "two-inequalities", r1[1] + r2[1]
        return None
    contracting = a.contracting
    expanding = b.expanding
    if contracting and expanding:
        return "contracting-below-expanding", [("contracting", eq.lhs), ("expanding", eq.rhs)]
    return None


def is_sahlqvist(eq, sig, dialect="general", depth_limit=12):
    """Search for a Sahlqvist decomposition of an equation."""
    if isinstance(eq, tuple):
        eq = Equation(eq, "=", BOT)
    if not _dialect_ok(sig, dialect):
        raise CoalcanError("DIALECT-MISMATCH", f"dialect {dialect} does not fit signature {sig.name}")
    if dialect in ("abstract", "substructural"):
        r = _canonical_inequality(eq, sig)
        if r:
            return SahlqvistVerdict(True, dialect, r[0], r[1])
        if sig.base != "BA":
            if eq.rhs == BOT and eq.rel == "=":
                d = _decompose(eq.lhs, sig, "substructural", depth_limit)
                if d:
                    return SahlqvistVerdict(True, dialect, "s[t,u]=bot", d)
            return SahlqvistVerdict(False, dialect, "none", [], "no stable sides and no bot form")
    decs = []
    for s in bottom_forms(eq, sig):
        s = nnf(s, sig)
        d = _decompose(s, sig, "general" if dialect == "abstract" else dialect, depth_limit)
        if d is None:
            return SahlqvistVerdict(False, dialect, "none", [], f"no decomposition of {show(s)} = bot")
        decs.extend(d)
    return SahlqvistVerdict(True, dialect, "s(t,!u)=bot", decs)


def reduce_quasi(s, t, sig, name="g"):
    """Encode s = bot => t = bot as t | g(s) = g(s) with a fresh unary g."""
    fresh = name
    k = 0
    while fresh in sig.symbols:
        k += 1
        fresh = f"{name}{k}"
    sig2 = sig.with_symbol(Symbol(fresh, 1, ["iso"], [{"j"}], "join-law"))
    gs = ("app", fresh, (s,))
    return Equation(("or", t, gs), "=", gs), sig2


def quasi_indicator(L):
    """The interpretation of the fresh symbol: bot -> bot, everything else -> top."""
    return np.array([L.bot if i == L.bot else L.top for i in range(L.n)], dtype=np.int32)


# ------------------------------------------------------- enumeration

def enumerate_terms(sig, vs, max_depth, extra_unary=(), allow_neg=True):
    """All terms of constructor depth <= max_depth (every constructor counts)."""
    levels = [[("var", v) for v in vs]]
    allt = list(levels[0])
    for d in range(1, max_depth + 1):
        new = []
        prev = allt
        for a in prev:
            if allow_neg and sig.base == "BA":
                new.append(("not", a))
            for s in sig.symbols.values():
                if s.arity == 1:
                    new.append(("app", s.name, (a,)))
        for a in prev:
            for b in prev:
                new.append(("and", a, b))
                new.append(("or", a, b))
        seen = set(allt)
        allt = allt + [t for t in new if t not in seen and not seen.add(t)]
    return allt
