import random
from itertools import combinations, product

import pytest
from hypothesis import given, settings, strategies as st

from coalcan.errors import CoalcanError
from coalcan.proofkit import (Judgment, LiftWitness, ProofObject, _T, big, check_el_proof, check_kkv_proof,
                              el_consequence_finite, format_proof, lifted_members, nabla_of, parse_proof,
                              parse_sexp, roundtrip_template, slim_redistributions, srd_bruteforce,
                              translate_axioms)
from coalcan.termlang import Signature, Symbol, classical_sig, parse_equation, parse_term, show

SIG = classical_sig()
DIA_ONLY = Signature("BA", [Symbol("dia", 1, ["iso"], [{"j"}], "join-law")], name="dia")


def T(text, sig=SIG):
    return parse_term(text, sig)


def J(text, sig=SIG):
    return Judgment.parse(text, sig)


def axioms_k(sig=SIG):
    return [parse_equation(line, sig) for line in open("demos/axioms_k.eq").read().splitlines() if line.strip()]


# ---------------------------------------------------------------- files

@pytest.mark.parametrize("name", ["el_congruence", "el_subst"])
def test_demo_el_proofs_accept(name):
    p = parse_proof(open(f"demos/{name}.proof").read(), SIG)
    assert check_el_proof(p, axioms_k())


def test_demo_nabla_proofs():
    good = parse_proof(open("demos/nabla1.proof").read())
    bad = parse_proof(open("demos/nabla1_bad.proof").read())
    assert check_kkv_proof(good, "Pw")
    v = check_kkv_proof(bad, "Pw")
    assert not v and v.code == "BAD-WITNESS"
    assert v.as_lines()[0] == "VERDICT: reject"


@pytest.mark.parametrize("name", ["el_congruence", "el_subst", "nabla1", "nabla1_bad"])
def test_proof_format_roundtrip(name):
    sig = None if name.startswith("nabla") else SIG
    p = parse_proof(open(f"demos/{name}.proof").read(), sig)
    q = parse_proof(format_proof(p), sig)
    assert format_proof(q) == format_proof(p)
    assert q.size() == p.size()


def test_sexp_errors():
    with pytest.raises(CoalcanError) as e:
        parse_sexp("(rule ax")
    assert e.value.code == "PARSE-ERROR"
    with pytest.raises(CoalcanError):
        parse_proof('(rule ax (premises))')


# ---------------------------------------------------------------- EL rules

def test_el_rejects_wrong_symmetry():
    p = ProofObject("sym", J("dia(p) = dia(p | q)"), [ProofObject("ax", J("dia(p | q) = dia(p) | dia(q)"))])
    v = check_el_proof(p, axioms_k())
    assert not v and v.code == "RULE-MISMATCH"


def test_el_bad_substitution():
    p = ProofObject("subst", J("p | r = r | p"), [ProofObject("ax", J("p | q = q | p"))], {"q": T("s")})
    v = check_el_proof(p, axioms_k())
    assert v.code == "BAD-SUBSTITUTION"


def test_el_cong_modal_pairs_must_come_from_premises():
    w = LiftWitness("tup", [(T("p"), T("q"))])
    p = ProofObject("cong-modal", J("dia(p) = dia(q)"), [ProofObject("refl", J("p = p"))], w)
    assert check_el_proof(p, []).code == "BAD-WITNESS"


class RandomEL:
    """Random correct EL derivations over a fixed axiom set."""

    def __init__(self, Ax, sig, seed):
        self.rng = random.Random(seed)
        self.Ax = Ax
        self.sig = sig
        self.atoms = [T(x, sig) for x in ("p", "q", "r", "top", "bot")]

    def term(self, depth=2):
        r = self.rng
        if depth == 0 or r.random() < 0.3:
            return r.choice(self.atoms)
        k = r.choice(["and", "or", "not", "dia"])
        if k == "not":
            return ("not", self.term(depth - 1))
        if k == "dia":
            return ("app", "dia", (self.term(depth - 1),))
        return (k, self.term(depth - 1), self.term(depth - 1))

    def proof(self, depth=3):
        r = self.rng
        if depth == 0:
            if r.random() < 0.5:
                e = r.choice(self.Ax)
                return ProofObject("ax", Judgment(e.lhs, "=", e.rhs))
            t = self.term()
            return ProofObject("refl", Judgment(t, "=", t))
        rule = r.choice(["sym", "subst", "cong-bool", "cong-modal", "trans"])
        q = self.proof(depth - 1)
        c = q.concl
        if rule == "sym":
            return ProofObject("sym", Judgment(c.rhs, "=", c.lhs), [q])
        if rule == "subst":
            from coalcan.termlang import substitute
            sub = {v: self.term(1) for v in ("p", "q")}
            return ProofObject("subst", Judgment(substitute(c.lhs, sub), "=", substitute(c.rhs, sub)), [q], sub)
        if rule == "cong-modal":
            return ProofObject("cong-modal", Judgment(("app", "dia", (c.lhs,)), "=", ("app", "dia", (c.rhs,))),
                               [q], LiftWitness("tup", [(c.lhs, c.rhs)]))
        if rule == "cong-bool":
            q2 = self.proof(depth - 1)
            d = q2.concl
            op = r.choice(["and", "or"])
            return ProofObject("cong-bool", Judgment((op, c.lhs, d.lhs), "=", (op, c.rhs, d.rhs)), [q, q2])
        # trans with a refl tail always chains
        tail = ProofObject("refl", Judgment(c.rhs, "=", c.rhs))
        return ProofObject("trans", Judgment(c.lhs, "=", c.rhs), [q, tail])


def test_random_el_proofs_are_accepted():
    Ax = axioms_k()
    for seed in range(200):
        p = RandomEL(Ax, SIG, seed).proof()
        assert check_el_proof(p, Ax), format_proof(p)


@pytest.mark.slow
def test_el_soundness_against_finite_oracle():
    Ax = [parse_equation(x, DIA_ONLY) for x in ("dia(p | q) = dia(p) | dia(q)", "dia(bot) = bot")]
    for seed in range(12):
        p = RandomEL(Ax, DIA_ONLY, seed).proof()
        assert check_el_proof(p, Ax)
        c = p.concl
        assert el_consequence_finite(Ax, (c.lhs, c.rhs), DIA_ONLY, cap=4)


def test_el_perturbed_conclusion_rejected():
    Ax = axioms_k()
    rejected = 0
    for seed in range(100):
        p = RandomEL(Ax, SIG, seed).proof()
        if p.rule == "refl":
            continue
        p.concl = Judgment(p.concl.lhs, "=", ("not", p.concl.rhs))
        rejected += not check_el_proof(p, Ax)
    assert rejected > 50


# ---------------------------------------------------------------- oracle

def test_oracle_refutes_and_confirms():
    v = el_consequence_finite(axioms_k(), parse_equation("dia(p) & dia(q) = dia(p & q)"), SIG, cap=4)
    assert not v and v.counter is not None
    A, env = v.counter
    assert A.counterexample(parse_equation("dia(p) & dia(q) = dia(p & q)")) is not None
    assert el_consequence_finite(axioms_k(), parse_equation("dia(p & q) <= dia(p)"), SIG, cap=4)


def test_oracle_cap():
    with pytest.raises(CoalcanError) as e:
        el_consequence_finite([], parse_equation("p = p"), SIG, cap=9)
    assert e.value.code == "CAP-EXCEEDED"


# ---------------------------------------------------------------- slim redistributions

def test_srd_examples():
    p, q = T("p"), T("q")
    # the empty family has two redistributions, a single empty object one
    assert set(slim_redistributions([])) == {frozenset(), frozenset({frozenset()})}
    assert slim_redistributions([frozenset()]) == [frozenset()]
    assert len(slim_redistributions([frozenset({p, q})])) == 5


POOL = [T(x) for x in ("p", "q", "r")]
SUBSETS = [frozenset(c) for k in range(4) for c in combinations(POOL, k)]


def key(Phi):
    if Phi == "star":
        return "star"
    if isinstance(Phi, frozenset):
        return frozenset(frozenset(map(show, s)) for s in Phi)
    return tuple(frozenset(map(show, s)) for s in Phi)


def test_srd_matches_bruteforce_powerset():
    for k in range(3):
        for A in combinations(SUBSETS, k):
            mine = {key(x) for x in slim_redistributions(A)}
            ref = {key(x) for x in srd_bruteforce(A)}
            assert mine == ref, A


def test_srd_matches_bruteforce_tuples():
    tuples = [tuple(t) for n in range(3) for t in product(POOL[:2], repeat=n)]
    for F in ("Tree2", "TreeOmega2*"):
        for k in range(3):
            for A in combinations(tuples, k):
                mine = {key(x) for x in slim_redistributions(A, F)}
                ref = {key(x) for x in srd_bruteforce(A, F)}
                assert mine == ref, (F, A)


# ---------------------------------------------------------------- KKV rules

def nabla2_proof(A, b, F="Pw"):
    lhs = big("and", [nabla_of(F, a) for a in A])
    prem = []
    for Phi in slim_redistributions(A, F):
        top = nabla_of(F, _T(F, "and", Phi))
        prem.append(ProofObject("ax", Judgment(top, "<=", b)))
    return ProofObject("nabla2", Judgment(lhs, "<=", b), prem), {(x.concl.lhs, x.concl.rhs) for x in prem}


def test_nabla2_accepts_exact_premises():
    p, q = T("p"), T("q")
    proof, ax = nabla2_proof([frozenset({p}), frozenset({q})], T("r"))
    assert check_kkv_proof(proof, "Pw", ax)


def test_nabla2_missing_premise():
    p, q = T("p"), T("q")
    proof, ax = nabla2_proof([frozenset({p}), frozenset({q})], T("r"))
    proof.premises.pop()
    v = check_kkv_proof(proof, "Pw", ax)
    assert v.code == "MISSING-PREMISE"


def test_nabla2_extra_premise():
    p, q = T("p"), T("q")
    proof, ax = nabla2_proof([frozenset({p}), frozenset({q})], T("r"))
    extra = ProofObject("refl", Judgment(T("r"), "<=", T("r")))
    proof.premises.append(extra)
    assert check_kkv_proof(proof, "Pw", ax).code == "RULE-MISMATCH"


@settings(max_examples=30, deadline=None)
@given(st.permutations(range(5)))
def test_premise_order_irrelevant(perm):
    p, q = T("p"), T("q")
    proof, ax = nabla2_proof([frozenset({p, q})], T("r"))
    assert len(proof.premises) == 5
    proof.premises = [proof.premises[i] for i in perm]
    assert check_kkv_proof(proof, "Pw", ax)


def test_nabla3_and_star():
    p, q = T("p"), T("q")
    Phi = frozenset({frozenset({p, q})})
    b = T("r")
    prem = [ProofObject("ax", Judgment(nabla_of("Pw", al), "<=", b)) for al in lifted_members("Pw", Phi)]
    ax = {(x.concl.lhs, x.concl.rhs) for x in prem}
    proof = ProofObject("nabla3", Judgment(nabla_of("Pw", _T("Pw", "or", Phi)), "<=", b), prem, Phi)
    assert check_kkv_proof(proof, "Pw", ax)
    proof.premises = proof.premises[1:]
    assert check_kkv_proof(proof, "Pw", ax).code == "MISSING-PREMISE"


def test_nabla2_tuple_functor():
    p, q = T("p"), T("q")
    proof, ax = nabla2_proof([(p, q), (q, q)], T("r"), "TreeOmega2*")
    assert check_kkv_proof(proof, "TreeOmega2*", ax)


def test_dist_rule():
    a = T("(p | q) & r")
    gs = [[T("p"), T("r")], [T("q"), T("r")]]
    b = big("or", [big("and", g) for g in gs])
    proof = ProofObject("dist", Judgment(a, "<=", b), [], gs)
    assert check_kkv_proof(proof)
    proof.witness = gs[:1]
    assert check_kkv_proof(proof).code == "BAD-WITNESS"


def test_structural_rules():
    p, q = T("p"), T("q")
    jr = ProofObject("join-r", Judgment(p, "<=", T("p | q")), [ProofObject("refl", Judgment(p, "<=", p))])
    ml = ProofObject("meet-l", Judgment(T("p & q"), "<=", p), [ProofObject("refl", Judgment(p, "<=", p))])
    cut = ProofObject("cut", Judgment(T("p & q"), "<=", T("p | q")), [ml, jr])
    assert check_kkv_proof(cut)
    jl = ProofObject("join-l", Judgment(T("p | q"), "<=", T("p | q")), [
        ProofObject("join-r", Judgment(p, "<=", T("p | q")), [ProofObject("refl", Judgment(p, "<=", p))]),
        ProofObject("join-r", Judgment(q, "<=", T("p | q")), [ProofObject("refl", Judgment(q, "<=", q))])])
    assert check_kkv_proof(jl)
    jl.premises.pop()
    assert check_kkv_proof(jl).code == "MISSING-PREMISE"


def test_negation_rules():
    p = T("p")
    refl = ProofObject("refl", Judgment(p, "<=", p))
    # excluded middle: p <= p gives top <= p | !p
    lem = ProofObject("neg-i", Judgment(T("top"), "<=", T("p | !p")), [refl])
    assert check_kkv_proof(lem)
    # p & !q <= p gives p <= p | q
    ml = ProofObject("meet-l", Judgment(T("p & !q"), "<=", p), [refl])
    assert check_kkv_proof(ProofObject("neg-e", Judgment(p, "<=", T("p | q")), [ml]))
    assert check_kkv_proof(ProofObject("neg-e", Judgment(p, "<=", T("p | r")), [ml])).code == "RULE-MISMATCH"


# ---------------------------------------------------------------- translations

@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["p", "dia(p)", "p & q", "!q | p", "dia(p | q)"]),
       st.sampled_from(["q", "box(q)", "p | q", "top", "dia(bot)"]))
def test_translation_roundtrip_is_derivable(a, b):
    a, b = T(a), T(b)
    back = translate_axioms("toSeq", translate_axioms("toEq", [(a, b)]))
    assert check_kkv_proof(roundtrip_template(a, b), "Pw", back)


def test_translate_unknown_direction():
    with pytest.raises(CoalcanError):
        translate_axioms("sideways", [])
