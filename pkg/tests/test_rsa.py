import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from rsa_refgame.errors import DimensionError, RefGameError, UnreachableObjectError
from rsa_refgame.meaning import Lexicon, rule_matrix, rule_meaning
from rsa_refgame.rsa import (DEFAULT_ALPHAS, SpeakerConfig, literal_listener, pragmatic_speaker, speaker_entropy,
                             speaker_for)
from rsa_refgame.utterance import logical_utterances, utterance_cost

from conftest import INTRO_SCHEMA


def intro_matrix(game, texts):
    lex = Lexicon.from_schema(INTRO_SCHEMA)
    return np.array([[rule_meaning(t, o, lex) for o in game.objects] for t in texts], dtype=float)


def test_intro_listener(intro_game):
    L = literal_listener(intro_matrix(intro_game, ["a red thing"]))
    np.testing.assert_allclose(L.probs[0], [0.5, 0.0, 0.5], atol=1e-12)


def test_intro_degenerate_row(intro_game):
    L = literal_listener(intro_matrix(intro_game, ["a red thing", "a blue thing"]))
    assert L.degenerate.tolist() == [False, True]
    assert (L.probs[1] == 0).all()


def test_intro_speaker(intro_game):
    # "a yellow thing" only makes the small yellow desk reachable; it is false of
    # the chair, so the chair's column over the other two candidates is unchanged.
    texts = ["a chair", "a red thing", "a yellow thing"]
    L = literal_listener(intro_matrix(intro_game, texts))
    S = pragmatic_speaker(L, [utterance_cost(t) for t in texts], 1.0)
    np.testing.assert_allclose(S.column(2), [0.75, 0.25, 0.0], atol=1e-9)


def test_intro_two_candidates_leave_desk_unreachable(intro_game):
    texts = ["a chair", "a red thing"]
    with pytest.raises(UnreachableObjectError) as info:
        pragmatic_speaker(literal_listener(intro_matrix(intro_game, texts)), [2, 3])
    assert info.value.object_index == 1


def test_speaker_columns_are_distributions(tuna_game):
    space = logical_utterances(tuna_game)
    m = rule_matrix(tuna_game, space, Lexicon.default())
    costs = [u.cost for u in space]
    for alpha in DEFAULT_ALPHAS:
        L, S = speaker_for(m, costs, SpeakerConfig(alpha))
        np.testing.assert_allclose(S.probs.sum(axis=0), 1.0, atol=1e-12)
        assert (S.probs[L.degenerate] == 0).all()


def test_matches_oracle_on_random_worlds():
    rng = random.Random(1)
    lex = Lexicon.default()
    for i in range(20):
        game = oracles.random_game(rng, rng.randint(2, 4), game_id=f"g{i}")
        space = logical_utterances(game)
        m = rule_matrix(game, space, lex).values
        costs = [u.cost for u in space]
        ref_L = oracles.listener(m.tolist())
        L = literal_listener(m)
        np.testing.assert_allclose(L.probs, ref_L, atol=1e-12)
        for alpha in DEFAULT_ALPHAS:
            np.testing.assert_allclose(pragmatic_speaker(L, costs, alpha).probs,
                                       oracles.speaker(ref_L, costs, alpha), atol=1e-9)


def test_non_uniform_prior():
    m = np.array([[1.0, 1.0], [1.0, 0.0]])
    L = literal_listener(m, prior=[0.25, 0.75])
    np.testing.assert_allclose(L.probs[0], [0.25, 0.75])


def test_unreachable_object():
    m = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(UnreachableObjectError) as info:
        pragmatic_speaker(literal_listener(m), [1, 1])
    assert info.value.object_index == 1


def test_input_validation():
    L = literal_listener(np.eye(2))
    with pytest.raises(DimensionError):
        pragmatic_speaker(L, [1, 1, 1])
    with pytest.raises(RefGameError):
        pragmatic_speaker(L, [1, 0])
    with pytest.raises(RefGameError):
        pragmatic_speaker(L, [1, 1], 0.0)
    with pytest.raises(DimensionError):
        literal_listener(np.ones(3))
    with pytest.raises(RefGameError):
        SpeakerConfig(prior=(0.5, 0.6))


def test_large_alpha_is_stable():
    m = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
    S = pragmatic_speaker(literal_listener(m), [1, 2, 3], 500.0)
    assert np.isfinite(S.probs).all()
    np.testing.assert_allclose(S.probs.sum(axis=0), 1.0)


def test_argmax_set_returns_ties():
    S = pragmatic_speaker(literal_listener(np.eye(2).repeat(2, axis=0)), [1, 1, 1, 1])
    assert S.argmax_set(0) == (0, 1)


def test_entropy_of_uniform_column():
    S = pragmatic_speaker(literal_listener(np.ones((4, 1))), [1, 1, 1, 1])
    assert speaker_entropy(S, 0) == pytest.approx(np.log(4))


binary = arrays(np.float64, st.tuples(st.integers(2, 6), st.integers(2, 4)), elements=st.sampled_from([0.0, 1.0]))


@settings(max_examples=60, deadline=None)
@given(binary, st.data())
def test_cost_scale_invariance(m, data):
    if not (m.sum(axis=0) > 0).all():
        return
    costs = np.array(data.draw(st.lists(st.integers(1, 8), min_size=m.shape[0], max_size=m.shape[0])), float)
    L = literal_listener(m)
    for alpha in DEFAULT_ALPHAS:
        base = pragmatic_speaker(L, costs, alpha).probs
        for c in (0.5, 10.0):
            assert np.abs(pragmatic_speaker(L, costs * c, alpha).probs - base).max() <= 1e-12
