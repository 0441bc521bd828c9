"""Command-line front end.

Every verb prints a line-oriented ``KEY: value`` report on stdout, written
once at the end.  Exit codes: 0 success or acceptance, 1 a well-formed
rejection, 2 an input error, 3 a budget or cap overrun.
"""

import argparse
import os
import sys

from .errors import BUDGET_CODES, CoalcanError

# mathematical verdicts rather than malformed input
REJECTION_CODES = {"NON-DISTRIBUTIVE", "NON-CANONICAL-AXIOM", "INCONSISTENT-Φ", "NO-SECTION",
                   "HOMOMORPHISM-FAILURE", "NOT-DISJOINT", "INCOMPATIBLE-PAIR"}


class Report:
    def __init__(self):
        self.lines = []
        self.status = 0

    def add(self, key, value=None):
        self.lines.append(key if value is None else f"{key}: {value}")

    def extend(self, lines):
        self.lines.extend(lines)

    def text(self):
        return "\n".join(self.lines) + "\n"


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise CoalcanError("INPUT-ERROR", f"cannot read {path}: {e.strerror}")


def _sig(spec):
    from .termlang import BUILTIN_SIGS, parse_sig
    if spec is None:
        return BUILTIN_SIGS["classical"]()
    if spec in BUILTIN_SIGS:
        return BUILTIN_SIGS[spec]()
    return parse_sig(_read(spec))


def _lattice(path):
    from .lattice import downset_lattice, parse_lat, parse_poset
    text = _read(path)
    if path.endswith(".poset"):
        return downset_lattice(parse_poset(text))
    return parse_lat(text)


def _equation(text, sig):
    """``s = t`` / ``s <= t``; a bare term T is read as T = bot."""
    from .termlang import BOT, Equation, parse_equation
    from .termlang import _Parser
    p = _Parser(text, sig)
    p.expr()
    if p.i == len(p.toks):
        from .termlang import parse_term
        return Equation(parse_term(text, sig), "=", BOT)
    return parse_equation(text, sig)


# ------------------------------------------------------------------- verbs

def cmd_duality(a, r):
    from .lattice import birkhoff_roundtrip, downset_lattice, format_poset, parse_poset
    text = _read(a.input)
    if a.input.endswith(".poset"):
        P = parse_poset(text)
        L = downset_lattice(P)
        w = birkhoff_roundtrip(L)
        r.add("INPUT", "poset")
        r.add("ELEMENTS", len(P))
        r.add("DOWNSETS", L.n)
        r.add("ROUNDTRIP-ISO", "yes" if w.dual.is_isomorphic(P) else "no")
        if not w.dual.is_isomorphic(P):
            r.status = 1
    else:
        A = _lattice(a.input)
        w = birkhoff_roundtrip(A)
        r.add("INPUT", "lattice")
        for k, v in w.report().items():
            r.add(k, v)
        r.add("DUAL-POSET")
        r.extend("  " + x for x in format_poset(w.dual).splitlines())


def cmd_extend(a, r):
    from .canext import DenseCompactPair, detect_properties, extension_maps, format_map, is_smooth, parse_map
    L = _lattice(a.lat)
    sub = None
    if a.sub:
        sub = [L.idx(x.strip()) if x.strip() in L.index else _unknown(x) for x in a.sub.split(",")]
    pair = DenseCompactPair(L, sub)
    f = parse_map(_read(a.map), pair)
    fs, fp = extension_maps(f)
    r.add("HOST", L.describe())
    r.add("SUB-SIZE", len(pair.sub))
    r.add("CLOSED", len(pair.K))
    r.add("OPEN", len(pair.O))
    r.add("SMOOTH", "yes" if is_smooth(f) else "no")
    name = lambda e: str(e)           # noqa: E731
    r.add("SIGMA")
    r.extend("  " + x for x in format_map(fs, name).splitlines())
    r.add("PI")
    r.extend("  " + x for x in format_map(fp, name).splitlines())
    r.add("SIGMA-PROPERTIES")
    r.extend("  " + x for x in detect_properties(fs).as_lines())


def _unknown(x):
    raise CoalcanError("INPUT-ERROR", f"unknown element {x.strip()}")


def cmd_classify(a, r):
    from .termlang import classify, parse_term, show
    sig = _sig(a.sig)
    t = parse_term(a.term, sig)
    r.add("TERM", show(t))
    r.extend(classify(t, sig).as_lines())


def cmd_sahlqvist(a, r):
    from .termlang import DIALECTS, is_sahlqvist
    sig = _sig(a.sig)
    eq = _equation(a.term, sig)
    r.add("EQUATION", repr(eq))
    dialects = DIALECTS if a.dialect == "all" else [a.dialect]
    accepted = []
    for d in dialects:
        try:
            v = is_sahlqvist(eq, sig, d)
        except CoalcanError as e:
            if e.code != "DIALECT-MISMATCH" or a.dialect != "all":
                raise
            r.add(f"[{d}] VERDICT", "dialect does not fit the signature")
            continue
        r.extend(f"[{d}] {x}" for x in v.as_lines())
        if v.accepted:
            accepted.append(d)
    r.add("ACCEPTED-IN", " ".join(accepted) or "none")
    if not accepted:
        r.status = 1


def _axioms(path, sig, sequents=False):
    from .termlang import parse_equation
    if not path:
        return []
    out = []
    for raw in _read(path).splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            e = parse_equation(line, sig)
            out.append((e.lhs, e.rhs) if sequents else e)
    return out


def cmd_prove_check(a, r):
    from .proofkit import check_el_proof, check_kkv_proof, parse_proof
    sig = _sig(a.sig) if a.sig else None
    p = parse_proof(_read(a.proof), sig)
    if a.kkv:
        F = {"pw": "Pw", "p": "Pw"}.get(a.kkv.lower(), a.kkv)
        v = check_kkv_proof(p, F, _axioms(a.ax, sig, sequents=True))
        r.add("SYSTEM", f"KKV({F})")
    else:
        v = check_el_proof(p, _axioms(a.ax, sig), sig)
        r.add("SYSTEM", "EL")
    r.add("CONCLUSION", repr(p.concl))
    r.add("NODES", p.size())
    r.extend(v.as_lines())
    if not v:
        r.status = 1


def cmd_model_check(a, r):
    from .coalg import eval_term, frame_valid, logic_from_name, parse_coalg
    from .termlang import parse_equation, parse_term
    logic = logic_from_name(a.logic) if a.logic else None
    M = parse_coalg(_read(a.model), logic)
    sig = M.logic.sig
    r.add("LOGIC", M.logic.name)
    r.add("STATES", M.n)
    for w in M.warnings:
        r.add("WARNING", w)
    for t in a.term or []:
        ext = eval_term(M, parse_term(t, sig))
        r.add(f"EXTENSION[{t}]", "{" + ", ".join(str(x) for x in M.carrier if x in ext) + "}")
    for e in a.frame or []:
        v = frame_valid(M, parse_equation(e, sig))
        r.add(f"FRAME-VALID[{e}]", "yes" if v else "no")
        if not v:
            cv = ", ".join(f"{p}={{{','.join(sorted(map(str, s)))}}}" for p, s in sorted(v.countervaluation.items()))
            r.add("COUNTER-VALUATION", cv)
            r.status = 1


def cmd_canonical_model(a, r):
    import numpy as np
    from .canext import DenseCompactPair, parse_map
    from .canmodel import OneStepAlgebra, build_section, complex_ops, jt_extend
    from .coalg import format_coalg, logic_from_name, parse_coalg
    from .lattice import PowersetBA
    logic = logic_from_name(a.logic)
    if a.coalg:
        M = parse_coalg(_read(a.coalg), logic)
        A = PowersetBA(list(range(M.n)))
        sets, ops = complex_ops(M, logic, True)
        r.add("SOURCE", f"complex algebra of a {M.n}-state frame")
    else:
        A = _lattice(a.lat)
        pair = DenseCompactPair.full(A)
        ops = {}
        for spec in a.map or []:
            if "=" not in spec:
                raise CoalcanError("INPUT-ERROR", "--map expects sym=file.map")
            sym, path = spec.split("=", 1)
            f = parse_map(_read(path), pair)
            ops[sym] = f.dense() if f.arity else np.int32(f.table[()])
        r.add("SOURCE", A.describe())
    osa = OneStepAlgebra(A, logic, ops, grade_cap=a.grade_cap)
    r.add("GENERATORS", len(osa.gens))
    r.add("ONE-STEP-FILTERS", osa.count())
    section = build_section(osa)
    if not ops:
        r.add("SECTION", "built (no host tables, so no frame)")
        r.extend(f"SECTION-ROW {c}: {n} generators -> {o}" for c, n, o in _trace(section))
        return
    jt = jt_extend(osa, section)
    r.add("HOMOMORPHISM", "yes" if jt.homomorphism else "no")
    r.add("EXTENSIONS-COINCIDE", "yes" if jt.extensions_coincide else "no")
    r.add("MODEL")
    r.extend("  " + x for x in format_coalg(jt.frame).splitlines())
    r.add("SECTION-TRACE")
    r.extend(f"  {c}: {n} generators -> {o}" for c, n, o in _trace(section)[:40])
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            fh.write(format_coalg(jt.frame))


def _trace(section):
    from .coalg import format_obj
    return [(c, len(on), format_obj(obj) if hasattr(obj, "kind") else sorted(obj)) for c, on, obj in section.trace()]


def cmd_translate(a, r):
    from .coalg import format_coalg, parse_coalg, logic_from_name
    from .termlang import nabla_sig, parse_term, show
    from .transpres import quotient_coalgebra, syntax_translate, transfer_check, transformation_from_name
    q = transformation_from_name(a.q, a.cap)
    r.add("# cap", f"arity {a.cap}")
    r.add("TRANSFORMATION", repr(q))
    sig = nabla_sig("tup")
    terms = [parse_term(t, sig) for t in a.term or []]
    for t in terms:
        r.add(f"TRANSLATION[{show(t)}]", show(syntax_translate(t, q)))
    if a.coalg:
        M = parse_coalg(_read(a.coalg), logic_from_name(f"nabla-tup:{a.cap}*"))
        Q = quotient_coalgebra(q, M)
        r.add("QUOTIENT")
        r.extend("  " + x for x in format_coalg(Q).splitlines())
        for t in terms:
            rep = transfer_check(q, "nabla", M, t)
            r.extend(f"[{show(t)}] {x}" for x in rep.lines())
            if not rep.ok:
                r.status = 1


def cmd_present(a, r):
    from .transpres import presentations
    X = [f"x{i}" for i in range(a.carrier)]
    c = presentations(a.functor, X, a.cap)
    r.extend(c.lines())
    if not c.ok:
        r.status = 1


def cmd_lift_axioms(a, r):
    from .termlang import nabla_sig, parse_equation
    from .transpres import lift_equations, transitivity_axiom
    sig = nabla_sig("set")
    E = [parse_equation(e, sig) for e in a.eq] if a.eq else [transitivity_axiom()]
    L = lift_equations(E, a.cap)
    r.extend(L.lines())
    r.add("LIFTED", len(L.items))
    r.add("ALL-SAHLQVIST", "yes" if all(x.sahlqvist for x in L.items) else "no")


def cmd_pipeline(a, r):
    from .canmodel import completeness_pipeline, heyting_algebras
    from .coalg import format_coalg, frame_valid, logic_from_name
    from .termlang import nabla_sig, parse_equation, parse_term, show
    from .transpres import lift_equations, quotient_coalgebra, syntax_translate, transformation_from_name
    if a.via:
        q = transformation_from_name(a.via, a.cap)
        logic = logic_from_name(f"nabla-tup:{a.cap}*")
        E = [parse_equation(e, nabla_sig("set")) for e in a.axiom]
        axioms = lift_equations(E, a.cap, check=False).equations
        r.add("# cap", f"arity {a.cap}")
        r.add("LIFTED-AXIOMS", len(axioms))
    else:
        logic = logic_from_name(a.logic)
        axioms = [parse_equation(e, logic.sig) for e in a.axiom]
    phi = [parse_term(t, logic.sig) for t in a.phi]
    algebras = heyting_algebras(a.max_size) if logic.kind in ("intuitionistic", "relational") else None
    attest = set(range(len(axioms))) if a.attest_all else {int(i) for i in a.attest or []}
    res = completeness_pipeline(logic, axioms, phi, a.max_states, attest, algebras)
    r.extend(res.report().splitlines())
    if not res.ok:
        r.status = 1
    model = res.model
    if a.via:
        Q = quotient_coalgebra(q, model)
        r.add("QUOTIENT-MODEL")
        r.extend("  " + x for x in format_coalg(Q).splitlines())
        for e in E:
            ok = bool(frame_valid(Q, e))
            r.add(f"QUOTIENT-FRAME-VALID[{e!r}]", "yes" if ok else "no")
            if not ok:
                r.status = 1
        from .coalg import eval_term
        for t in phi:
            ok = res.designated in eval_term(Q, syntax_translate(t, q))
            r.add(f"QUOTIENT-PHI[{show(syntax_translate(t, q))}]", "holds" if ok else "FAILS")
        model = Q
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            fh.write(format_coalg(model))


# ------------------------------------------------------------------ parser

def build_parser():
    p = argparse.ArgumentParser(prog="coalcan", description="Canonical extensions and coalgebraic canonical models")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("duality", help="Birkhoff round trip for a .lat or .poset file")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(fn=cmd_duality)

    s = sub.add_parser("extend", help="sigma and pi extensions of a .map")
    s.add_argument("--lat", required=True)
    s.add_argument("--map", required=True)
    s.add_argument("--sub", help="comma separated sub-lattice elements (default: the whole host)")
    s.set_defaults(fn=cmd_extend)

    s = sub.add_parser("classify", help="stability and property flags of a term")
    s.add_argument("--sig")
    s.add_argument("--term", required=True)
    s.set_defaults(fn=cmd_classify)

    s = sub.add_parser("sahlqvist", help="Sahlqvist recognizer; a bare term T means T = bot")
    s.add_argument("--sig")
    s.add_argument("--term", required=True)
    s.add_argument("--dialect", default="all")
    s.set_defaults(fn=cmd_sahlqvist)

    s = sub.add_parser("prove-check", help="check an EL or KKV proof object")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--el", action="store_true")
    g.add_argument("--kkv", metavar="FUNCTOR")
    s.add_argument("proof")
    s.add_argument("--sig")
    s.add_argument("--ax", help="file with one axiom per line")
    s.set_defaults(fn=cmd_prove_check)

    s = sub.add_parser("model-check", help="evaluate terms on a .coalg model")
    s.add_argument("model")
    s.add_argument("--logic")
    s.add_argument("--term", action="append")
    s.add_argument("--frame", action="append", help="equation checked for frame validity")
    s.set_defaults(fn=cmd_model_check)

    s = sub.add_parser("canonical-model", help="section and Jonsson-Tarski frame of a finite algebra")
    s.add_argument("--logic", required=True)
    s.add_argument("--lat")
    s.add_argument("--map", action="append", help="sym=file.map expansion table")
    s.add_argument("--coalg", help="use the complex algebra of this frame instead")
    s.add_argument("--grade-cap", type=int)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_canonical_model)

    s = sub.add_parser("translate", help="tuple-to-set syntax translation and quotient coalgebras")
    s.add_argument("--q", default="tup-to-set")
    s.add_argument("--term", action="append")
    s.add_argument("--coalg")
    s.add_argument("--cap", type=int, default=3)
    s.set_defaults(fn=cmd_translate)

    s = sub.add_parser("present", help="canonical and minimal presentations")
    s.add_argument("--functor", default="Pw")
    s.add_argument("--carrier", type=int, default=2)
    s.add_argument("--cap", type=int, default=2)
    s.set_defaults(fn=cmd_present)

    s = sub.add_parser("lift-axioms", help="capped preimages E* of set-nabla equations")
    s.add_argument("--eq", action="append")
    s.add_argument("--cap", type=int, default=3)
    s.set_defaults(fn=cmd_lift_axioms)

    s = sub.add_parser("pipeline", help="completeness via canonicity at finite scale")
    s.add_argument("--logic", default="classical")
    s.add_argument("--axiom", action="append", default=[])
    s.add_argument("--phi", action="append", default=[])
    s.add_argument("--max-states", type=int, default=3)
    s.add_argument("--max-size", type=int, default=4, help="algebra size cap for relational logics")
    s.add_argument("--attest", action="append", help="index of an axiom attested canonical")
    s.add_argument("--attest-all", action="store_true")
    s.add_argument("--via", help="run on the tuple logic and quotient along this transformation")
    s.add_argument("--cap", type=int, default=3)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_pipeline)
    return p


def run(argv):
    """Returns (exit code, report text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return (0 if e.code == 0 else 2), ""
    r = Report()
    r.add("COMMAND", args.verb)
    try:
        args.fn(args, r)
    except CoalcanError as e:
        r.add("ERROR", e.code)
        r.add("MESSAGE", e.message or str(e))
        if e.code in BUDGET_CODES:
            return 3, r.text()
        if e.code in REJECTION_CODES:
            return 1, r.text()
        return 2, r.text()
    except RecursionError:
        r.add("ERROR", "BUDGET-EXCEEDED")
        return 3, r.text()
    return r.status, r.text()


def main(argv=None):
    if os.environ.get("COALCAN_BUDGET"):
        try:
            int(os.environ["COALCAN_BUDGET"])
        except ValueError:
            print("coalcan: COALCAN_BUDGET must be an integer", file=sys.stderr)
            return 2
    code, text = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(text)
    if code == 2 and text:
        err = [x for x in text.splitlines() if x.startswith("MESSAGE:")]
        if err:
            print("coalcan: " + err[0][len("MESSAGE: "):], file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
