from pathlib import Path

import pytest

from rsa_refgame.corpus import (Corpus, generate_synthetic, load_corpus, parse_corpus, parse_tuna_trial,
                                read_corpus, save_corpus, serialize_corpus)
from rsa_refgame.errors import CapacityError, EmptyTrialError, IngestionError
from rsa_refgame.world import FURNITURE, realize_description, validate_game

FIXTURES = Path(__file__).parent / "fixtures" / "tuna"
TRIAL = (FIXTURES / "s1t1.xml").read_text()


def trial_xml(trial_id, objects, drop=None, extra=""):
    ents = []
    for i, o in enumerate(objects):
        attrs = "".join(f'<ATTRIBUTE NAME="{a}" VALUE="{f}"/>' for a, f in o.assignment if a != drop)
        role = "target" if i == 0 else "distractor"
        ents.append(f'<ENTITY ID="e{i}" TYPE="{role}">{attrs}{extra}</ENTITY>')
    return f'<TRIAL ID="{trial_id}"><DOMAIN>{"".join(ents)}</DOMAIN></TRIAL>'


def test_trial_expands_to_one_game_per_object():
    games = parse_tuna_trial(TRIAL)
    assert [g.game_id for g in games] == [f"s1t1#{i}" for i in range(7)]
    assert [g.target_index for g in games] == list(range(7))
    assert len({g.objects for g in games}) == 1
    assert realize_description(games[0].target) == "a large, red chair facing back"
    assert all(validate_game(g) == [] for g in games)


def test_extra_attributes_ignored():
    games = parse_tuna_trial(TRIAL)
    assert all(set(o.as_dict()) == set(FURNITURE.names) for o in games[0].objects)


def test_missing_attribute_names_entity():
    objects = generate_synthetic(3, n_objects=3, n_games=1).games[0].objects
    with pytest.raises(IngestionError, match="e0.*orientation"):
        parse_tuna_trial(trial_xml("t", objects, drop="orientation"))


def test_empty_trial():
    with pytest.raises(EmptyTrialError):
        parse_tuna_trial('<TRIAL ID="t"><DOMAIN/></TRIAL>')


def test_feature_outside_domain_rejected():
    bad = TRIAL.replace('VALUE="blue"', 'VALUE="purple"')
    with pytest.raises(IngestionError, match="purple"):
        parse_tuna_trial(bad)


def write_trials(directory, n_trials, seed=5):
    synth = generate_synthetic(seed, n_objects=7, n_games=n_trials)
    for i, g in enumerate(synth.games):
        (directory / f"trial{i:03d}.xml").write_text(trial_xml(f"trial{i:03d}", g.objects))


def test_420_trials_give_2940_games(tmp_path):
    write_trials(tmp_path, 420)
    corpus = load_corpus(tmp_path)
    assert len(corpus) == 2940
    assert corpus.stats()["trials"] == 420
    assert corpus.stats()["objects_per_game"] == {7: 2940}


def test_empty_directory_warns(tmp_path, caplog):
    corpus = load_corpus(tmp_path)
    assert len(corpus) == 0
    assert "no trial files" in caplog.text


def test_load_order_and_determinism(tmp_path):
    write_trials(tmp_path, 5)
    a, b = load_corpus(tmp_path), load_corpus(tmp_path)
    assert serialize_corpus(a) == serialize_corpus(b)
    ids = [g.game_id for g in a.games]
    assert ids == sorted(ids, key=lambda s: (s.split("#")[0], int(s.split("#")[1])))


def test_bad_file_propagates_with_path(tmp_path):
    write_trials(tmp_path, 2)
    (tmp_path / "trial999.xml").write_text('<TRIAL ID="x"><DOMAIN/></TRIAL>')
    with pytest.raises(IngestionError, match="trial999.xml"):
        load_corpus(tmp_path)
    corpus, errors = load_corpus(tmp_path, skip_bad=True)
    assert len(corpus) == 14
    assert len(errors) == 1 and "trial999.xml" in errors[0][0]


def test_round_trip(tmp_path):
    write_trials(tmp_path, 3)
    corpus = load_corpus(tmp_path)
    text = serialize_corpus(corpus, header={"manifest_sha256": "abc"})
    again = parse_corpus(text)
    assert again == corpus
    assert serialize_corpus(again, header={"manifest_sha256": "abc"}) == text
    save_corpus(corpus, tmp_path / "c.jsonl")
    assert read_corpus(tmp_path / "c.jsonl") == corpus


def test_record_field_order():
    line = serialize_corpus(generate_synthetic(1, n_games=1)).splitlines()[0]
    assert line.startswith('{"game_id":')
    assert line.index('"schema"') < line.index('"objects"') < line.index('"target_index"')


def test_synthetic_is_valid_and_reproducible():
    a = generate_synthetic(1, FURNITURE, 7, 10)
    assert len(a) == 10
    assert all(validate_game(g) == [] for g in a.games)
    assert all(len(set(g.objects)) == 7 for g in a.games)
    assert serialize_corpus(a) == serialize_corpus(generate_synthetic(1, FURNITURE, 7, 10))
    assert serialize_corpus(a) != serialize_corpus(generate_synthetic(2, FURNITURE, 7, 10))


def test_synthetic_capacity():
    with pytest.raises(CapacityError):
        generate_synthetic(1, FURNITURE, 200, 1)
    assert len(generate_synthetic(1, FURNITURE, 128, 1).games[0].objects) == 128


def test_duplicate_game_ids_rejected():
    g = generate_synthetic(1, n_games=1).games[0]
    with pytest.raises(Exception, match="duplicate"):
        Corpus((g, g))
