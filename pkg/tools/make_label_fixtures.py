"""Regenerate the shipped logic label fixture.

Labels come from bundle subsumption over the construction record, not from
any meaning function, so the fixture can grade the rule-based one.
"""

import json
from pathlib import Path

import numpy as np

from rsa_refgame.corpus import generate_synthetic
from rsa_refgame.utterance import logical_utterances
from rsa_refgame.world import realize_description

OUT = Path(__file__).resolve().parents[1] / "src/rsa_refgame/data/labels/logic.jsonl"


def main():
    rng = np.random.default_rng(2024)
    rows = []
    for world, seed in (("logic1", 11), ("logic2", 12)):
        game = generate_synthetic(seed, n_objects=7, n_games=1).games[0]
        space = logical_utterances(game)
        pairs = [(u, o) for u in space for o in game.objects]
        for idx in sorted(rng.choice(len(pairs), size=300, replace=False)):
            u, o = pairs[idx]
            bundle = u.provenance.bundle.present()
            label = int(all(o[a] == f for a, f in bundle.items()))
            rows.append({"world": world, "object": realize_description(o), "utterance": u.text, "label": label})
    OUT.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    print(f"{len(rows)} pairs, {sum(r['label'] for r in rows)} positive -> {OUT}")


if __name__ == "__main__":
    main()
