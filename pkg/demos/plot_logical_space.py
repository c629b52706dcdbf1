"""
Enumerating the logical utterance space
=======================================

Every partial description of the furniture world is a bundle that picks a
value (or nothing) per attribute. A game keeps the bundles that fit at least
one of its objects.
"""

from rsa_refgame.corpus import generate_synthetic
from rsa_refgame.utterance import enumerate_bundles, logical_utterances, realize_bundle
from rsa_refgame.world import FURNITURE, realize_description

bundles = enumerate_bundles(FURNITURE)
print(len(bundles), "bundles in total")
for b in bundles[:5]:
    print("  ", realize_bundle(b))

# %%
# A seven-object synthetic game and its space.
game = generate_synthetic(seed=3, n_objects=7, n_games=1).games[0]
for i, o in enumerate(game.objects):
    print(i, realize_description(o), "(target)" if i == game.target_index else "")

space = logical_utterances(game)
print(len(space), "logical utterances, e.g.")
for u in space.utterances[::40]:
    print(f"  cost {u.cost}: {u.text}")
