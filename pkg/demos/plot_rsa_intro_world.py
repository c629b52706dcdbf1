"""
A pragmatic speaker in a three-object world
===========================================

Two desks and a chair. Saying "a red thing" is literally true of the red
desk and the chair. A speaker who wants to pick out the chair should prefer
"a chair", and the cost of an extra word pushes it further that way.
"""

import numpy as np

from rsa_refgame.meaning import Lexicon, rule_meaning
from rsa_refgame.rsa import DEFAULT_ALPHAS, literal_listener, pragmatic_speaker, speaker_entropy
from rsa_refgame.utterance import utterance_cost
from rsa_refgame.world import AttributeSchema, ObjectDescription

schema = AttributeSchema((
    ("type", ("chair", "sofa", "desk", "fan")),
    ("colour", ("blue", "red", "green", "grey", "yellow")),
    ("size", ("large", "small")),
    ("orientation", ("left", "right", "front", "back")),
))
objects = [ObjectDescription.from_mapping({"size": s, "colour": c, "type": t, "orientation": "front"}, schema)
           for s, c, t in (("small", "red", "desk"), ("small", "yellow", "desk"), ("large", "red", "chair"))]

# %%
# Literal meaning comes from the rule-based lexicon lookup.
lex = Lexicon.from_schema(schema)
texts = ["a chair", "a red thing", "a yellow thing", "a desk"]
M = np.array([[rule_meaning(t, o, lex) for o in objects] for t in texts], dtype=float)
print(M)

# %%
# The literal listener spreads belief evenly over the objects an utterance fits.
L = literal_listener(M)
print(np.round(L.probs, 3))

# %%
# The speaker trades informativity against length. Watch the chair's column
# sharpen as alpha grows.
costs = [utterance_cost(t) for t in texts]
for alpha in DEFAULT_ALPHAS:
    S = pragmatic_speaker(L, costs, alpha)
    col = S.column(2)
    print(f"alpha={alpha:>3}: " + "  ".join(f"{t!r}={p:.3f}" for t, p in zip(texts, col))
          + f"  H={speaker_entropy(S, 2):.3f}")
