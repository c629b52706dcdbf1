"""Acceptance criteria 1-7, each as one test printing a single PASS/FAIL line.

The lines are repeated in the pytest terminal summary, so they show up
even when output is captured.
"""

import json
import math
import random
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES, INTRO_SCHEMA, run_mock_pipeline
from rsa_refgame.analysis import pearson, spearman
from rsa_refgame.meaning import Lexicon, bundled_labels, evaluate_mf, load_labels, rule_matrix, rule_meaning
from rsa_refgame.rsa import DEFAULT_ALPHAS, literal_listener, pragmatic_speaker, speaker_entropy
from rsa_refgame.utterance import logical_utterances, utterance_cost
from rsa_refgame.world import FURNITURE, ObjectDescription, ReferenceGame, parse_description


def report(n, name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {name}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print("\n" + line)
    assert ok, detail


def test_criterion_1_rsa_matches_brute_force():
    rng = random.Random(20240601)
    lex = Lexicon.default()
    worst = 0.0
    for i in range(200):
        game = oracles.random_game(rng, rng.randint(2, 4), game_id=f"w{i}")
        space = logical_utterances(game)
        m = rule_matrix(game, space, lex).values
        costs = [u.cost for u in space]
        ref_L = oracles.listener(m.tolist())
        L = literal_listener(m)
        worst = max(worst, float(np.abs(L.probs - np.array(ref_L)).max()))
        for alpha in DEFAULT_ALPHAS:
            S = pragmatic_speaker(L, costs, alpha)
            worst = max(worst, float(np.abs(S.probs - np.array(oracles.speaker(ref_L, costs, alpha))).max()))
    report(1, "RSA oracle equivalence over 200 worlds x 6 alphas", worst <= 1e-9, f"max abs diff {worst:.2e}")


def test_criterion_2_intro_speaker():
    objects = tuple(ObjectDescription.from_mapping(
        {"size": s, "colour": c, "type": t, "orientation": "front"}, INTRO_SCHEMA)
        for s, c, t in (("small", "red", "desk"), ("small", "yellow", "desk"), ("large", "red", "chair")))
    game = ReferenceGame("intro", INTRO_SCHEMA, objects, 2)
    lex = Lexicon.from_schema(INTRO_SCHEMA)
    # the third candidate is false of the chair; it only keeps the yellow desk reachable
    texts = ["a chair", "a red thing", "a yellow thing"]
    m = np.array([[rule_meaning(t, o, lex) for o in game.objects] for t in texts], dtype=float)
    S = pragmatic_speaker(literal_listener(m), [utterance_cost(t) for t in texts], 1.0)
    col = S.column(2)[:2]
    err = float(np.abs(col - [0.75, 0.25]).max())
    report(2, "intro world speaker column [0.75, 0.25]", err <= 1e-9 and S.column(2)[2] == 0,
           f"got {col.tolist()}")


def test_criterion_3_cost_scale_and_sharpening():
    rng = np.random.default_rng(3)
    worst, bad_entropy, bad_argmax, checked = 0.0, 0, 0, 0
    while checked < 100:
        n_u, n_o = int(rng.integers(3, 8)), int(rng.integers(2, 5))
        m = (rng.random((n_u, n_o)) < 0.5).astype(float)
        if not (m.sum(axis=0) > 0).all():
            continue
        costs = rng.integers(1, 7, n_u).astype(float)
        L = literal_listener(m)
        tables = [pragmatic_speaker(L, costs, a).probs for a in DEFAULT_ALPHAS]
        for a, base in zip(DEFAULT_ALPHAS, tables):
            for c in (0.5, 10.0):
                worst = max(worst, float(np.abs(pragmatic_speaker(L, costs * c, a).probs - base).max()))
        for o in range(n_o):
            col = tables[0][:, o]
            top = np.sort(col)[-2:] if len(col) > 1 else col
            if len(col) > 1 and top[1] - top[0] < 1e-9:
                continue  # argmax tie
            ent = [speaker_entropy(pragmatic_speaker(L, costs, a), o) for a in DEFAULT_ALPHAS]
            bad_entropy += any(b > a + 1e-12 for a, b in zip(ent, ent[1:]))
            bad_argmax += len({int(np.argmax(t[:, o])) for t in tables}) != 1
        checked += 1
    ok = worst <= 1e-12 and bad_entropy == 0 and bad_argmax == 0
    report(3, "cost-scale invariance and alpha sharpening over 100 tables", ok,
           f"max diff {worst:.1e}, entropy violations {bad_entropy}, argmax changes {bad_argmax}")


def test_criterion_4_logic_counts():
    single = ReferenceGame("one", FURNITURE, (parse_description("a large, red chair facing left"),), 0)
    n_single = len(logical_utterances(single))
    rng = random.Random(44)
    mismatches = 0
    for i in range(50):
        game = oracles.random_game(rng, 7, game_id=f"g{i}")
        mismatches += len(logical_utterances(game)) != oracles.count_logic(game)
    report(4, "logic utterance counts", n_single == 16 and mismatches == 0,
           f"single-object {n_single}, mismatches {mismatches}/50")


def test_criterion_5_rule_mf_fidelity():
    lex = Lexicon.default()
    rows = load_labels(bundled_labels("logic"))
    preds = [rule_meaning(r["utterance"], parse_description(r["object"]), lex) for r in rows]
    acc = evaluate_mf(preds, [r["label"] for r in rows]).accuracy
    neg = load_labels(bundled_labels("topk"))[0]
    neg_pred = rule_meaning(neg["utterance"], parse_description(neg["object"]), lex)
    ok = len(rows) >= 500 and acc == 1.0 and neg["label"] == 1 and neg_pred == 0
    report(5, "rule MF fidelity and negation failure", ok,
           f"{len(rows)} pairs, accuracy {acc:.3f}, negation case predicted {neg_pred}")


def test_criterion_6_correlations():
    rng = random.Random(6)
    worst, undefined_mismatch = 0.0, 0
    for _ in range(1000):
        n = rng.randint(2, 25)
        levels = [rng.random() for _ in range(rng.randint(1, 4))]
        x = [rng.choice(levels) if rng.random() < 0.5 else rng.gauss(0, 1) for _ in range(n)]
        y = [rng.choice(levels) if rng.random() < 0.3 else rng.gauss(0, 1) for _ in range(n)]
        for fn, ref in ((pearson, oracles.pearson), (spearman, oracles.spearman)):
            got = fn(x, y)
            try:
                want = ref(x, y)
            except ZeroDivisionError:
                want = None
            if (got is None) != (want is None):
                undefined_mismatch += 1
            elif got is not None:
                worst = max(worst, abs(got - want))
    same = [0.2, 0.9, 0.9, 0.1, 0.5]
    exact = pearson(same, same) == 1.0 and spearman(same, same) == 1.0
    report(6, "PCC/SRCC oracle match on 1000 vectors", worst <= 1e-12 and undefined_mismatch == 0 and exact,
           f"max diff {worst:.1e}, identical-input exact: {exact}")


def test_criterion_7_mock_end_to_end(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    start = time.perf_counter()
    out_a = run_mock_pipeline(tmp_path / "a", games=10)
    elapsed = time.perf_counter() - start
    out_b = run_mock_pipeline(tmp_path / "b", games=10)
    same = all((out_a / p.name).read_bytes() == p.read_bytes() for p in out_b.iterdir())
    t3 = (out_a / "group_summary.tsv").read_text().splitlines()[2:]
    triples = (out_a / "alpha_pcc.tsv").read_text().splitlines()[2:]
    alphas = sorted({float(r.split("\t")[0]) for r in triples})
    summary = json.loads((out_a / "summary.json").read_text())
    ok = (elapsed < 60 and same and len(t3) == 6 and alphas == list(DEFAULT_ALPHAS)
          and all(r.split("\t")[3] != "" and r.split("\t")[4] != "" for r in triples) and summary["reports"])
    report(7, "mock end-to-end pipeline", ok,
           f"{elapsed:.1f}s, deterministic: {same}, table rows {len(t3)}, alpha rows {len(triples)}")


def test_criterion_8_is_not_desk_reproducible():
    ACCEPTANCE_LINES.append("[SKIP] criterion 8: headline numbers need TUNA and a live Llama 3 8B endpoint")
    pytest.skip("criterion 8 needs the TUNA corpus and a live Llama 3 8B endpoint; not checked here")
