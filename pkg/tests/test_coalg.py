from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coalcan.coalg import (STAR, Bag, Coalgebra, Powerset, Tree, _eval_vec, all_kripke_frames, base,
                           base_bruteforce, classical_logic, delta, eval_term, fbag, format_coalg, format_obj,
                           frame_valid, fset, ftup, functor_from_name, gml_logic, kripke, lift_relation,
                           logic_from_name, parse_coalg, parse_obj, satisfied_at, terminal_sequence_interp,
                           tree_logic)
from coalcan.errors import CoalcanError
from coalcan.termlang import parse_equation, parse_term

T_PRIME = "dia(p) & dia(q & !p) & dia(r & !p & !q)"


def barr_lift(F, R, X, Y):
    """Oracle: pairs (F pi1 w, F pi2 w) for w ranging over F R."""
    R = sorted(R)
    out = set()
    for w in F.objects(range(len(R))):
        a = F.fmap(lambda i: R[i][0], w)
        b = F.fmap(lambda i: R[i][1], w)
        out.add((a, b))
    return out


def compose(R, S):
    return {(x, z) for x, y in R for y2, z in S if y == y2}


def all_relations(X, Y):
    pairs = list(product(X, Y))
    for bits in range(1 << len(pairs)):
        yield {p for k, p in enumerate(pairs) if bits >> k & 1}


# ---------------------------------------------------------------- objects

def test_object_literals_roundtrip():
    elem = {"a": 0, "b": 1}
    for text in ("{a,b}", "{}", "bag{a:2,b:1}", "tup(a,b,a)", "tup()", "star"):
        obj = parse_obj(text, elem)
        again = parse_obj(format_obj(obj, lambda i: "ab"[i]), elem)
        assert again == obj


def test_coalg_file_roundtrip():
    text = open("demos/tuple.coalg").read()
    M = parse_coalg(text)
    M2 = parse_coalg(format_coalg(M))
    assert M2.gamma == M.gamma and M2.val == M.val and M2.carrier == M.carrier
    assert M.gamma[2] == STAR


def test_parse_errors():
    with pytest.raises(CoalcanError) as e:
        parse_coalg("carrier a\ngamma b := {a}\n")
    assert e.value.code == "PARSE-ERROR"
    with pytest.raises(CoalcanError) as e:
        parse_coalg("carrier a\nfrobnicate\n")
    assert e.value.code == "PARSE-ERROR"
    with pytest.raises(CoalcanError):
        parse_coalg("carrier a\ngamma a := {}\nval p := {z}\n")


def test_gamma_must_be_total():
    with pytest.raises(CoalcanError) as e:
        parse_coalg("carrier a b\ngamma a := {b}\n")
    assert e.value.code == "INPUT-ERROR"


def test_bag_over_cap_rejected():
    with pytest.raises(CoalcanError):
        parse_coalg("logic gml:2\ncarrier a\ngamma a := bag{a:3}\n")


# ---------------------------------------------------------------- lifting

@pytest.mark.parametrize("name", ["Pw", "Bag1", "Bag2", "Tree1", "Tree2", "TreeOmega2*"])
def test_lifting_matches_barr_oracle(name):
    F = functor_from_name(name)
    X, Y = [0, 1], ["a", "b"]
    for R in all_relations(X, Y):
        assert F.lift(R, X, Y) == barr_lift(F, R, X, Y), (name, R)


@pytest.mark.parametrize("name", ["Pw", "Tree2", "TreeOmega2*"])
def test_lifting_composes_for_weak_pullback_functors(name):
    F = functor_from_name(name)
    X = [0, 1]
    rels = list(all_relations(X, X))
    rng = np.random.default_rng(1)
    for i, j in rng.integers(0, len(rels), (60, 2)):
        R, S = rels[i], rels[j]
        assert F.lift(compose(R, S), X, X) == compose(F.lift(R, X, X), F.lift(S, X, X))


def test_saturating_bag_breaks_composition():
    F = Bag(2)
    X = [0, 1]
    found = None
    for R in all_relations(X, X):
        for S in all_relations(X, X):
            if F.lift(compose(R, S), X, X) != compose(F.lift(R, X, X), F.lift(S, X, X)):
                found = (R, S)
                break
        if found:
            break
    assert found is not None


def test_lift_relation_wrapper():
    assert len(lift_relation(Powerset(), {("x", "a")}, ["x"], ["a"])) == 2


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["Pw", "Bag2", "Tree3", "TreeOmega2*"]), st.integers(0, 10_000))
def test_base_agrees_with_bruteforce(name, seed):
    F = functor_from_name(name)
    objs = F.objects(range(3))
    obj = objs[seed % len(objs)]
    assert base(F, obj) == frozenset(base_bruteforce(F, obj, range(3)))


# ---------------------------------------------------------------- delta

def test_delta_dia():
    out = delta(classical_logic(), [1, 2], ("dia", [{1}]))
    assert out == {fset([1]), fset([1, 2])}


def test_delta_gml_grade_overflow():
    with pytest.raises(CoalcanError) as e:
        delta(gml_logic(2, 5), ["x"], ("k5", [{"x"}]))
    assert e.value.code == "GRADE-OVERFLOW"
    assert delta(gml_logic(2), ["x"], ("k2", [{"x"}])) == {fbag({"x": 2})}


def test_delta_nabla_set():
    N = logic_from_name("nabla-set")
    out = delta(N, [0, 1], ("nabla", "set", [{0}, {1}]))
    assert out == {fset([0, 1])}


def test_delta_tree():
    out = delta(tree_logic(2), [0, 1], ("node2", [{0}, {0, 1}]))
    assert out == {ftup([0, 0]), ftup([0, 1])}


# ---------------------------------------------------------------- semantics

def test_eval_simple_model():
    M = kripke({"w": ["v"], "v": []}, {"p": ["v"]})
    assert eval_term(M, parse_term("dia(p)")) == {"w"}
    assert satisfied_at(M, parse_term("box(bot)"), "v")


def test_gml_counts_multiplicity():
    M = Coalgebra(range(2), {0: fbag({1: 2}), 1: fbag({})}, logic=gml_logic(2))
    assert eval_term(M, parse_term("k2(top)", gml_logic(2).sig)) == {0}


def test_tuple_model_nabla():
    M = parse_coalg(open("demos/tuple.coalg").read())
    N = M.logic
    t = parse_term("nabla(p, q)", N.sig)
    assert eval_term(M, t) == {"u"}


def test_frame_validity_k_axiom_on_all_small_frames():
    eq = parse_equation("box(p & q) = box(p) & box(q)")
    for n in (1, 2):
        for M in all_kripke_frames(n):
            assert frame_valid(M, eq)


def test_transitivity_correspondence():
    eq = parse_equation("dia(dia(p)) <= dia(p)")
    for M in all_kripke_frames(3):
        succ = [set(g.data) for g in M.gamma]
        transitive = all(succ[y] <= succ[x] for x in range(3) for y in succ[x])
        assert bool(frame_valid(M, eq)) == transitive


def test_budget_exceeded():
    M = kripke({0: [0]})
    with pytest.raises(CoalcanError) as e:
        frame_valid(M, parse_equation("dia(p) = p"), budget=1)
    assert e.value.code == "BUDGET-EXCEEDED"


def states_satisfiable(M, t, vs=("p", "q", "r")):
    """Mask of states where t holds under at least one valuation."""
    choices = np.arange(1 << M.n, dtype=np.int64)
    grids = np.meshgrid(*([choices] * len(vs)), indexing="ij")
    env = {v: g.reshape(-1) for v, g in zip(vs, grids)}
    vals = np.broadcast_to(_eval_vec(M, t, env, M.logic, {}, {}), (len(choices) ** len(vs),))
    return int(np.bitwise_or.reduce(vals))


def test_three_successors_literal_validity_fails():
    M = kripke({s: "abc" for s in "abc"})
    verdict = frame_valid(M, parse_equation(T_PRIME))
    assert not verdict
    assert verdict.countervaluation["p"] == frozenset()


def test_three_successors_satisfiability_correspondence():
    t = parse_term(T_PRIME)
    for n in (1, 2, 3):
        for M in all_kripke_frames(n):
            sat = states_satisfiable(M, t)
            for x in range(n):
                assert bool(sat >> x & 1) == (len(M.gamma[x].data) >= 3)


def odd_exclusion(G):
    return [parse_equation(f"k{2 * k + 1}(top) & !k{2 * k + 2}(top) = bot", G.sig) for k in range(6)]


def test_gml_even_mass_correspondence_two_states():
    G = gml_logic(4, 12)
    axs = odd_exclusion(G)
    F = G.functor
    bags = F.objects(range(2))
    for g0, g1 in product(bags, repeat=2):
        M = Coalgebra(range(2), {0: g0, 1: g1}, logic=G)
        valid = all(frame_valid(M, a) for a in axs)
        even = all(sum(m for _, m in g.data) % 2 == 0 for g in (g0, g1))
        assert valid == even


# ---------------------------------------------------------------- terminal sequence

def test_terminal_sequence_agrees_with_models():
    seq = terminal_sequence_interp(classical_logic(), 2, ["p"])
    t = parse_term("dia(p) & box(p)")
    den = seq.denote(t)
    assert den
    for i in den:
        colour, obj = seq.stages[2][i]
        assert obj.data


def test_logic_names():
    for name in ("classical", "gml:2", "gml:2:5", "nabla-set", "nabla-tup:2*", "tree:2", "tree-omega:2*",
                 "relational:heyting", "intuitionistic"):
        logic_from_name(name)
    with pytest.raises(CoalcanError):
        logic_from_name("nope")
    assert isinstance(functor_from_name("TreeOmega3*"), Tree)
