import random

import pytest
from hypothesis import given, settings, strategies as st

from coalcan.coalg import Coalgebra, Tree, fbag, ftup, nabla_logic
from coalcan.errors import CoalcanError
from coalcan.termlang import mk_nabla, parse_term, show
from coalcan.transpres import (bag_support, canonical_preimage, identity, lambda_inclusion, lift_equations,
                               modal_algebras, orthogonality_transfer, preimages, presentations,
                               quotient_coalgebra, syntax_translate, three_successor_axiom,
                               transfer_check, transformation_from_name, transitivity_axiom, tuples_to_sets)

TUP = nabla_logic(Tree(3, omega=True, star=True))


def tterm(text):
    return parse_term(text, TUP.sig)


# ---------------------------------------------------------------- transformations

def test_naturality_of_registered_transformations():
    assert tuples_to_sets(2).naturality(max_carrier=2) == []
    assert bag_support(2).naturality(max_carrier=2) == []
    assert identity(Tree(2)).naturality(max_carrier=2) == []


def test_naturality_detects_a_non_natural_rule():
    from coalcan.transpres import NatTransf
    from coalcan.coalg import Powerset, fset
    # sends every nonempty tuple to {0}, which renaming does not respect
    bad = NatTransf("const", Tree(1), Powerset(), lambda o: fset([0]) if o.data else fset(()))
    assert bad.naturality(max_carrier=2)


def test_transformation_names():
    assert transformation_from_name("tup-to-set", 2).source.name == "TreeOmega2*"
    assert transformation_from_name("id:Pw").target.name == "Pw"
    with pytest.raises(CoalcanError):
        transformation_from_name("nope")


def test_bag_support_component():
    assert bag_support(2)(fbag({0: 2, 1: 1})).data == frozenset({0, 1})


# ---------------------------------------------------------------- syntax

def test_translation_examples():
    assert show(syntax_translate(tterm("nabla(p, q, p)"))) == show(parse_term("nabla{p, q}"))
    assert show(syntax_translate(tterm("nabla(nabla(p, p), nabla(p))"))) == show(parse_term("nabla{nabla{p}}"))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["nabla{p, q}", "nabla{nabla{p}}", "nabla{p} & !nabla{q, top}", "nabla{}",
                        "nabla{nabla{p, q}, r}"]))
def test_preimages_translate_back(text):
    t = parse_term(text)
    pre = preimages(t, 3)
    assert pre
    assert canonical_preimage(t) in pre
    for a in pre:
        assert syntax_translate(a) == t


def test_preimage_count_small():
    # nabla{p, q} has tuples (p,q), (q,p) and the six length-3 covers
    assert len(preimages(parse_term("nabla{p, q}"), 3)) == 2 + 6


def random_positive(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return ("var", rng.choice("pq"))
    k = rng.choice(["and", "or", "nabla"])
    if k == "nabla":
        return mk_nabla("tup", [random_positive(rng, depth - 1) for _ in range(rng.randint(0, 2))])
    return (k, random_positive(rng, depth - 1), random_positive(rng, depth - 1))


def random_tuple_coalgebra(rng, n):
    objs = TUP.functor.objects(range(n))
    gamma = {i: rng.choice(objs) for i in range(n)}
    M = Coalgebra(range(n), gamma, logic=TUP)
    M.val = {"p": rng.randrange(1 << n), "q": rng.randrange(1 << n)}
    return M


def test_transfer_has_no_violations():
    rng = random.Random(5)
    q = tuples_to_sets(3)
    for _ in range(200):
        M = random_tuple_coalgebra(rng, rng.randint(1, 3))
        t = random_positive(rng, 3)
        assert transfer_check(q, "nabla", M, t).ok


def test_incompatible_pair():
    rng = random.Random(0)
    M = random_tuple_coalgebra(rng, 2)
    with pytest.raises(CoalcanError) as e:
        transfer_check(bag_support(2), "nabla", M, tterm("p"))
    assert e.value.code == "INCOMPATIBLE-PAIR"


def test_quotient_coalgebra():
    M = Coalgebra(range(2), {0: ftup([1, 1, 0]), 1: ftup([])}, logic=TUP)
    Q = quotient_coalgebra(tuples_to_sets(3), M)
    assert Q.gamma[0].data == frozenset({0, 1}) and Q.gamma[1].data == frozenset()


def test_lambda_inclusion():
    assert lambda_inclusion(tuples_to_sets(2), n=2) == []


# ---------------------------------------------------------------- presentations

@pytest.mark.parametrize("name,X,n", [("Pw", 2, 2), ("Pw", 3, 3), ("Bag2", 2, 2), ("Bag2", 3, 3),
                                      ("Tree2", 2, 2), ("Tree2", 3, 2)])
def test_presentations_agree(name, X, n):
    cert = presentations(name, range(X), n)
    assert cert.closures_equal and cert.bijection and cert.ok
    lines = cert.lines()
    assert lines[-2:] == ["CLOSURES-EQUAL: yes", "BIJECTION: yes"]


def test_presentation_atoms_powerset():
    cert = presentations("Pw", range(2), 3)
    # base-full subsets of k are only k itself
    assert {k: len(v) for k, v in cert.atoms.items()} == {0: 1, 1: 1, 2: 1, 3: 1}


def test_presentation_cap():
    with pytest.raises(CoalcanError) as e:
        presentations("Pw", range(5), 2)
    assert e.value.code == "CAP-EXCEEDED"


# ---------------------------------------------------------------- lifted equations

def test_lift_transitivity():
    S = lift_equations([transitivity_axiom()], 3)
    assert len(S.equations) == 117
    assert all(x.sahlqvist for x in S.items)
    assert S.lines()[0] == "# cap: arity 3"


def test_lift_small_cap():
    S = lift_equations([transitivity_axiom()], 2)
    assert len(S.equations) == 12
    for e in S.equations:
        assert syntax_translate(e.lhs) == transitivity_axiom().lhs


def test_modal_algebra_count():
    # 1 + 2 + 16 normal additive diamonds on BAs of 1, 2, 4 elements
    assert len(modal_algebras(4)) == 19


@pytest.mark.parametrize("axiom", [transitivity_axiom, three_successor_axiom])
def test_orthogonality_transfer(axiom):
    rows = orthogonality_transfer([axiom()], 3, 4)
    assert len(rows) == 19
    assert all(r.valid_E == r.valid_Estar for r in rows)


def test_three_successor_only_on_trivial_algebra():
    rows = orthogonality_transfer([three_successor_axiom()], 2, 4)
    assert [r.size for r in rows if r.valid_E] == [1]
