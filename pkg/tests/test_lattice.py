import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coalcan.errors import CoalcanError
from coalcan.lattice import (
    FinPoset, TableLattice, PowersetBA, birkhoff_roundtrip, chain, congruence_classes,
    downset_lattice, free_ba, parse_lat, parse_poset, format_lat, format_poset,
    prime_filters, prime_filters_bruteforce, quotient_ba, random_poset, all_posets,
    is_filter, is_prime_filter,
)


def test_downsets_examples():
    assert len(downset_lattice(FinPoset([], np.zeros((0, 0)))) ) == 1
    two_chain = FinPoset.from_pairs("ab", [("a", "b")])
    L = downset_lattice(two_chain)
    assert sorted(map(sorted, L.elements)) == [[], ["a"], ["a", "b"]]
    anti = FinPoset.discrete("ab")
    D = downset_lattice(anti)
    assert len(D) == 4
    assert D.order().is_isomorphic(PowersetBA(["a", "b"]).order())


def test_prime_filter_examples():
    C = chain(3)
    _, fs = prime_filters(C)
    assert sorted(sorted(f.members) for f in fs) == [[1, 2], [2]]
    B = PowersetBA(["x", "y"])
    _, fs = prime_filters(B)
    assert len(fs) == 2
    assert all(f.flavor == "ultrafilter" for f in fs)
    _, fs = prime_filters(chain(2, "BA"))
    assert [sorted(f.members) for f in fs] == [[1]]


def test_prime_filters_match_bruteforce():
    rng = np.random.default_rng(3)
    for _ in range(25):
        P = random_poset(int(rng.integers(0, 5)), rng)
        L = downset_lattice(P)
        _, fs = prime_filters(L)
        assert {f.members for f in fs} == set(prime_filters_bruteforce(L))


def test_ultrafilters_are_principal_on_atoms():
    for m in range(4):
        B = PowersetBA(range(m))
        _, fs = prime_filters(B)
        assert len(fs) == len(B.atoms())
        assert {f.members for f in fs} == {B.upset(a) for a in B.atoms()}


def test_roundtrip_examples():
    w = birkhoff_roundtrip(chain(2, "BA"))
    assert len(w.eta[1]) == 1 and w.eta[0] == frozenset()
    w = birkhoff_roundtrip(chain(3))
    assert len(w.dual) == 2 and len(w.dual.covers()) == 1
    w = birkhoff_roundtrip(PowersetBA("xyz"))
    assert len(w.dual) == 3 and w.dual.covers() == []


def test_roundtrip_recovers_small_posets():
    for n in range(4):
        for P in all_posets(n):
            w = birkhoff_roundtrip(downset_lattice(P))
            assert w.dual.is_isomorphic(P)


def test_eta_homomorphism_and_ji_bijection():
    rng = np.random.default_rng(7)
    for _ in range(10):
        L = downset_lattice(random_poset(4, rng))
        w = birkhoff_roundtrip(L)
        assert len(set(w.ji_to_filter.values())) == len(w.filters)
        for a in range(L.n):
            for b in range(L.n):
                assert w.eta[L.meet(a, b)] == w.eta[a] & w.eta[b]
                assert w.eta[L.join(a, b)] == w.eta[a] | w.eta[b]


def test_non_distributive_rejected():
    # the diamond M3
    elems = ["0", "a", "b", "c", "1"]
    P = FinPoset.from_pairs(elems, [("0", x) for x in "abc"] + [(x, "1") for x in "abc"])
    with pytest.raises(CoalcanError) as e:
        TableLattice("BDL", elems, P.leq)
    assert e.value.code == "NON-DISTRIBUTIVE"


def test_free_ba_sizes():
    assert len(free_ba([])[0]) == 2
    assert len(free_ba(["p"])[0]) == 4
    B, emb = free_ba(["p", "q"])
    assert len(B) == 16
    assert B.meet(emb["p"], emb["q"]) != B.bot
    with pytest.raises(CoalcanError) as e:
        free_ba("pqrst")
    assert e.value.code == "CAP-EXCEEDED"


def test_quotient_examples():
    B, emb = free_ba(["p"])
    Q, h = quotient_ba(B, [])
    assert len(Q) == 4
    Q, h = quotient_ba(B, [(emb["p"], B.top)])
    assert len(Q) == 2
    B, emb = free_ba(["p", "q"])
    Q, h = quotient_ba(B, [(emb["p"], emb["q"])])
    assert len(Q) == 4
    assert h[emb["p"]] == h[emb["q"]]


def _table_copy(B):
    return TableLattice("BA", list(range(B.n)), B.tables()[2])


def test_quotient_shortcut_agrees_with_closure():
    rng = np.random.default_rng(11)
    B, _ = free_ba(["p", "q"])
    T = _table_copy(B)
    for _ in range(30):
        pairs = [tuple(int(x) for x in rng.integers(0, 16, 2)) for _ in range(int(rng.integers(0, 3)))]
        Q, h = quotient_ba(B, pairs)
        cls = congruence_classes(T, pairs)
        for a in range(16):
            for b in range(16):
                assert (h[a] == h[b]) == (cls[a] == cls[b])
        Q2, h2 = quotient_ba(T, pairs)
        assert len(Q2) == len(Q)


def test_quotient_is_initial():
    # every homomorphism B -> 2 identifying the pairs factors through the quotient
    B, emb = free_ba(["p", "q"])
    pairs = [(emb["p"], B.join(emb["q"], emb["p"]))]
    Q, h = quotient_ba(B, pairs)
    _, ufs = prime_filters(B)
    for uf in ufs:
        if all((a in uf) == (b in uf) for a, b in pairs):
            # the kernel of the hom contains the congruence
            for a in range(B.n):
                for b in range(B.n):
                    if h[a] == h[b]:
                        assert (a in uf) == (b in uf)


def test_formats_roundtrip():
    P = parse_poset("# a chain\nelem a\nelem b\nelem c\nle a b\nle b c\n")
    assert P.le("a", "c")
    assert parse_poset(format_poset(P)).is_isomorphic(P)
    L = parse_lat("kind BA\nelem 0\nelem x\nelem y\nelem 1\nle 0 x\nle 0 y\nle x 1\nle y 1\n")
    assert L.neg(L.index["x"]) == L.index["y"]
    L2 = parse_lat(format_lat(L))
    assert L2.n == 4 and L2.kind == "BA"
    with pytest.raises(CoalcanError):
        parse_lat("kind XX\nelem a\n")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5), st.integers(0, 10_000))
def test_filters_of_downset_lattices(n, seed):
    rng = np.random.default_rng(seed)
    L = downset_lattice(random_poset(n, rng))
    _, fs = prime_filters(L)
    for f in fs:
        assert is_filter(L, f.members) and is_prime_filter(L, f.members)
    assert len(fs) == n
