import itertools

import pytest

from otparse import Parser
from otparse.chart import Node, PartialDescription, Position, Underparsed
from otparse.constraints import Ranking
from otparse.grammar import derive_categories, nonterminal
from otparse.oracle import (
    InstanceTooLargeError,
    canonical,
    default_bound,
    enumerate_candidates,
    evaluate_global,
    factorial_typology,
    is_candidate,
    oracle_best,
    oracle_best_naive,
    remove_one_cycle,
    typology_report,
)
from randsys import inputs_up_to, random_instance

S = nonterminal("S")
VC_TREE = "S(F(Y(M(□),F(Y(P(V))),M(C))))"


def rendered(cands):
    return {d.render() for d in cands}


def test_enumeration_small_cases(grammar):
    assert rendered(enumerate_candidates(["V"], grammar, 0)) == {"S(F(Y(P(V))))", "S() + <V>"}
    assert rendered(enumerate_candidates([], grammar, 0)) == {"S()"}
    assert VC_TREE in rendered(enumerate_candidates(["V", "C"], grammar, 1))


def test_enumeration_respects_bound(grammar):
    for bound in range(3):
        for d in enumerate_candidates(["C", "V"], grammar, bound):
            unfilled = d.render().count("□")
            assert unfilled <= bound
            assert is_candidate(d, ["C", "V"], grammar) == []


def test_enumeration_grows_with_bound(grammar):
    sizes = [len(enumerate_candidates(["V"], grammar, b)) for b in range(4)]
    assert sizes == sorted(sizes) and sizes[0] < sizes[-1]


def test_evaluate_global(system, grammar):
    (d,) = [c for c in enumerate_candidates(["V", "C"], grammar, 1) if c.render() == VC_TREE]
    assert evaluate_global(d, system) == {"Fill^m": 1}
    assert evaluate_global(PartialDescription((), S, None, None), system) == {}
    assert evaluate_global([Underparsed("V", 1), Underparsed("C", 2)], system) == {"Parse": 2}


@pytest.mark.parametrize("word, marks", [("VC", {"Fill^m": 1}), ("V", {}), ("CV", {"Fill^m": 1})])
def test_oracle_examples(grammar, system, ranking, word, marks):
    best, winners = oracle_best(list(word), grammar, system, ranking)
    assert best == marks
    if word == "VC":
        assert VC_TREE in rendered(winners)


def test_oracle_matches_naive_scoring(grammar, system, ranking):
    for n in range(4):
        for w in itertools.product("CV", repeat=n):
            for bound in range(3):
                fast, fw = oracle_best(list(w), grammar, system, ranking, bound)
                slow, sw = oracle_best_naive(list(w), grammar, system, ranking, bound)
                assert ranking.key(fast) == ranking.key(slow)
                assert sorted(str(canonical(d)) for d in fw) == sorted(str(canonical(d)) for d in sw)


@pytest.mark.parametrize("seed", range(8))
def test_oracle_matches_naive_on_random_systems(seed):
    g, system, ranking = random_instance(seed)
    for w in inputs_up_to(2):
        fast, _ = oracle_best(w, g, system, ranking, 2)
        slow, _ = oracle_best_naive(w, g, system, ranking, 2)
        assert (fast is None) == (slow is None)
        if fast is not None:
            assert ranking.key(fast) == ranking.key(slow)


def test_bound_sufficiency(grammar, system, ranking):
    cats = len(derive_categories(grammar))
    for n in range(1, 5):
        for w in itertools.product("CV", repeat=n):
            at, _ = oracle_best(list(w), grammar, system, ranking, cats * (n + 1))
            beyond, _ = oracle_best(list(w), grammar, system, ranking, cats * (n + 1) + 3)
            assert ranking.compare(at, beyond) == 0


def test_default_bound(grammar):
    assert default_bound(3, grammar) == 3 + 2 * 6


def test_size_guard(grammar, system, ranking):
    with pytest.raises(InstanceTooLargeError):
        oracle_best(list("CVCVCVCVC"), grammar, system, ranking)
    with pytest.raises(ValueError):
        enumerate_candidates(["C"], grammar, -1)


def test_is_candidate_catches_problems(grammar):
    good = PartialDescription((Node("S", (Node("F", (Node("Y", (Node("P", (Position("p", "V", 1),)),)),)),)),), S, 1, 1)
    assert is_candidate(good, ["V"], grammar) == []
    assert is_candidate(good, ["C"], grammar)
    assert is_candidate(good, ["V", "V"], grammar)
    wrong = PartialDescription((Node("S", (Node("P", (Position("p", "V", 1),)),)),), S, 1, 1)
    assert any("no production" in p for p in is_candidate(wrong, ["V"], grammar))


def test_remove_one_cycle():
    # F(Y(M(□),F(Y(P(V))),M(□))) contains F(Y(P(V))) with only unfilled material around it
    inner = Node("F", (Node("Y", (Node("P", (Position("p", "V", 1),)),)),))
    outer = Node("F", (Node("Y", (Node("M", (Position("m"),)), inner, Node("M", (Position("m"),)))),))
    assert inner in set(remove_one_cycle(outer))


def test_typology_example(grammar, system):
    typ = factorial_typology(["V", "C", "VC", "CVC"], grammar, system)
    assert sum(len(lang.rankings) for lang in typ.languages) == 120
    row = typ.row_for(["-(m/V)", "-(p/C)", "Parse", "Fill^p", "Fill^m"])
    assert row.surfaces[2] == "□VC"
    low_parse = typ.row_for(["-(m/V)", "-(p/C)", "Fill^p", "Fill^m", "Parse"])
    assert low_parse.surfaces[1] == ""
    text = typology_report(typ)
    assert "/VC/" in text.splitlines()[0]
    assert len(typology_report(typ, "tsv").splitlines()) == len(typ.languages) + 1


def test_typology_single_constraint():
    from otparse import parse_constraint_spec, parse_grammar

    g = parse_grammar("S -> A\nA -> a\n")
    system, _ = parse_constraint_spec("alphabet: x\nconstraint Fill = fill(a)\nranking: Fill\n", g.terminals)
    typ = factorial_typology(["x"], g, system)
    assert len(typ.languages) == 1


def test_typology_guard(grammar, system):
    with pytest.raises(InstanceTooLargeError):
        factorial_typology(["V"], grammar, system, max_constraints=4)
