"""Brute-force reference implementations used only by the tests.

Plain Python loops and direct formulas, sharing no code with the package.
"""

import itertools
import math
import random

from rsa_refgame.world import FURNITURE, ObjectDescription, ReferenceGame

ROLES = ("type", "colour", "size", "orientation")


def all_bundles(schema=FURNITURE):
    slots = [list(schema.domain(a)) + [None] for a in schema.names]
    return [dict(zip(schema.names, combo)) for combo in itertools.product(*slots)]


def fits(bundle, obj):
    return all(v is None or obj.get(a) == v for a, v in bundle.items())


def count_logic(game):
    return sum(1 for b in all_bundles(game.schema) if any(fits(b, o) for o in game.objects))


def listener(m):
    """m: list of rows (utterances) of lists (objects)."""
    n_obj = len(m[0])
    out = []
    for row in m:
        z = sum(v / n_obj for v in row)
        out.append([0.0] * n_obj if z == 0 else [(v / n_obj) / z for v in row])
    return out


def speaker(L, costs, alpha):
    n_u, n_obj = len(L), len(L[0])
    cols = []
    for o in range(n_obj):
        w = [(L[u][o] / costs[u]) ** alpha if L[u][o] > 0 else 0.0 for u in range(n_u)]
        z = sum(w)
        cols.append([x / z for x in w])
    return [[cols[o][u] for o in range(n_obj)] for u in range(n_u)]


def pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def ranks(x):
    """Average ranks (1-based) by counting, no sorting tricks."""
    out = []
    for v in x:
        below = sum(1 for w in x if w < v)
        equal = sum(1 for w in x if w == v)
        out.append(below + (equal + 1) / 2)
    return out


def spearman(x, y):
    return pearson(ranks(x), ranks(y))


def random_game(rng: random.Random, n_objects, schema=FURNITURE, game_id="g"):
    pool = list(itertools.product(*(schema.domain(a) for a in schema.names)))
    picks = rng.sample(pool, n_objects)
    objects = tuple(ObjectDescription.from_mapping(dict(zip(schema.names, p)), schema) for p in picks)
    return ReferenceGame(game_id, schema, objects, rng.randrange(n_objects))
