import math
import random

import numpy as np
import pytest

from oracles import fits, random_game
from rsa_refgame.errors import RefGameError, ScoringError, TransportError
from rsa_refgame.llm import MockClient
from rsa_refgame.meaning import (PROMPT, RULE, Lexicon, MeaningMatrix, binarize, bundled_labels, evaluate_mf,
                                 load_labels, prompt_matrix, prompt_meaning, read_matrices, rule_judge,
                                 rule_matrix, rule_meaning, sweep_threshold, write_matrices, yes_ratio)
from rsa_refgame.utterance import logical_utterances
from rsa_refgame.world import FURNITURE, parse_description

from conftest import obj

LEX = Lexicon.default()


@pytest.mark.parametrize("text,expected", [
    ("a red chair", 1),
    ("the large chair facing left", 1),
    ("a blue chair", 0),
    ("a big red armchair", 1),
    ("the chair that is not red", 1),   # negation is invisible to the rule
    ("something over there", 1),
    ("a couch", 0),
])
def test_rule_meaning(text, expected):
    assert rule_meaning(text, obj("large", "red", "chair", "left"), LEX) == expected


def test_rule_matches_subsumption_on_logic_spaces():
    rng = random.Random(9)
    for i in range(15):
        game = random_game(rng, rng.randint(2, 5), game_id=f"g{i}")
        for u in logical_utterances(game):
            b = {a: v for a, v in u.provenance.bundle.slots}
            for o in game.objects:
                assert rule_meaning(u, o, LEX) == int(fits(b, o)), (u.text, o)


def test_lexicon_tsv_round_trip():
    again = Lexicon.parse_tsv(LEX.to_tsv())
    assert again.entries == LEX.entries
    assert again.hash == LEX.hash
    assert LEX.lookup("Forwards") == (("orientation", "front"),)


def test_lexicon_rejects_unknown_feature():
    lex = Lexicon.parse_tsv("purple\tcolour\tpurple\n")
    assert lex.violations(FURNITURE)
    with pytest.raises(RefGameError):
        lex.check(FURNITURE)


def test_default_lexicon_is_valid():
    LEX.check(FURNITURE)


def test_prompt_meaning_fixed_probabilities():
    o = obj("large", "red", "chair", "left")
    hi = MockClient(fixed_top={" Yes": math.log(0.9), " No": math.log(0.1)})
    assert prompt_meaning("a chair", o, hi) == pytest.approx(0.9, abs=1e-12)
    even = MockClient(fixed_top={"Yes": math.log(0.2), "No": math.log(0.2), " the": math.log(0.6)})
    assert prompt_meaning("a chair", o, even) == pytest.approx(0.5, abs=1e-12)


def test_yes_variants_are_summed():
    top = {" Yes": math.log(0.3), "yes": math.log(0.1), " NO": math.log(0.2), " Maybe": math.log(0.4)}
    assert prompt_meaning("a chair", obj("large", "red", "chair", "left"), MockClient(fixed_top=top)) \
        == pytest.approx(0.4 / 0.6)


def test_yes_ratio_zero_mass():
    with pytest.raises(Exception, match="zero"):
        yes_ratio(0.0, 0.0)


def test_prompt_meaning_wraps_llm_errors():
    class Broken(MockClient):
        def yes_no_probability(self, prompt):
            raise TransportError("down")
    with pytest.raises(ScoringError) as info:
        prompt_meaning("a chair", obj("large", "red", "chair", "left"), Broken(), game_id="g", object_index=3)
    assert info.value.game_id == "g" and info.value.object_index == 3


def test_mock_with_rule_judge_agrees_with_rule(tuna_game):
    client = MockClient(judge=rule_judge(LEX))
    space = logical_utterances(tuna_game)
    pm = prompt_matrix(tuna_game, space, client)
    rm = rule_matrix(tuna_game, space, LEX)
    assert pm.kind == PROMPT and rm.kind == RULE
    assert np.array_equal(pm.values >= 0.5, rm.values == 1)


def test_matrix_round_trip(tmp_path, tuna_game):
    space = logical_utterances(tuna_game)
    m = rule_matrix(tuna_game, space, LEX)
    write_matrices([m], tmp_path / "m.jsonl", header={"manifest_sha256": "x"})
    again = read_matrices(tmp_path / "m.jsonl")
    assert list(again.values()) == [m]


def test_matrix_validation():
    with pytest.raises(RefGameError):
        MeaningMatrix("g", ("a",), 2, [[0.5, 1.0]], RULE)
    with pytest.raises(RefGameError):
        MeaningMatrix("g", ("a",), 2, [[1.5, 1.0]], PROMPT)
    with pytest.raises(RefGameError):
        MeaningMatrix("g", ("a", "b"), 2, [[1.0, 1.0]], PROMPT)


def test_binarize_inclusive():
    assert binarize(0.5, 0.5) == 1
    assert binarize(0.4999, 0.5) == 0


def test_evaluate_mf_counts():
    r = evaluate_mf([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert (r.tp, r.fp, r.tn, r.fn) == (2, 1, 1, 1)
    assert r.accuracy == pytest.approx(0.6)
    assert r.precision == pytest.approx(2 / 3)
    assert r.recall == pytest.approx(2 / 3)


def test_evaluate_mf_undefined_ratios():
    r = evaluate_mf([0, 0], [0, 0])
    assert r.accuracy == 1.0 and r.precision is None and r.recall is None
    with pytest.raises(RefGameError):
        evaluate_mf([0], [0, 1])


def brute_sweep(scores, truth):
    best = None
    for t in sorted(set(scores) | {0.0, 1.0}):
        acc = sum(int(s >= t) == y for s, y in zip(scores, truth)) / len(scores)
        if best is None or acc > best[1] + 1e-15:
            best = (t, acc)
    return best


def test_sweep_threshold_matches_brute_force():
    rng = random.Random(2)
    for _ in range(200):
        n = rng.randint(1, 12)
        scores = [rng.choice([0.1, 0.3, 0.5, 0.7, 0.9, rng.random()]) for _ in range(n)]
        truth = [rng.randint(0, 1) for _ in range(n)]
        t, report = sweep_threshold(scores, truth)
        _, acc = brute_sweep(scores, truth)
        assert report.accuracy == pytest.approx(acc)
        preds = [binarize(s, t) for s in scores]
        assert evaluate_mf(preds, truth).accuracy == pytest.approx(acc)


def test_sweep_representative_is_lowest_positive_score():
    t, report = sweep_threshold([0.2, 0.6, 0.8], [0, 1, 1])
    assert t == 0.6 and report.accuracy == 1.0


def test_label_files():
    logic = load_labels(bundled_labels("logic"))
    assert len(logic) >= 500
    topk = load_labels(bundled_labels("topk"))
    assert topk[0]["label"] == 1 and "not" in topk[0]["utterance"]
    with pytest.raises(RefGameError, match="not found"):
        load_labels("/nonexistent/labels.jsonl")


def test_rule_on_bundled_logic_labels_is_perfect():
    rows = load_labels(bundled_labels("logic"))
    preds = [rule_meaning(r["utterance"], parse_description(r["object"]), LEX) for r in rows]
    assert evaluate_mf(preds, [r["label"] for r in rows]).accuracy == 1.0
