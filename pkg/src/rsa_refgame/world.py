"""Reference-game worlds: attribute schemas, objects, games and their descriptions."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .errors import SchemaError

# Noun-phrase roles used by the description template.
TYPE, COLOUR, SIZE, ORIENTATION = "type", "colour", "size", "orientation"
TEMPLATE_ROLES = (TYPE, COLOUR, SIZE, ORIENTATION)


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute -> feature-domain table defining a world's vocabulary."""

    attributes: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        attrs = tuple((str(name), tuple(str(f) for f in feats)) for name, feats in self.attributes)
        object.__setattr__(self, "attributes", attrs)
        names = [name for name, _ in attrs]
        if not attrs:
            raise SchemaError("schema has no attributes")
        if any(not name for name in names):
            raise SchemaError("attribute names must be non-empty")
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate attribute names in {names}")
        for name, feats in attrs:
            if not feats:
                raise SchemaError(f"attribute {name!r} has an empty feature domain")
            if len(set(feats)) != len(feats):
                raise SchemaError(f"attribute {name!r} has duplicate features")
            if any(not f for f in feats):
                raise SchemaError(f"attribute {name!r} has an empty feature name")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Sequence[str]]) -> "AttributeSchema":
        return cls(tuple((k, tuple(v)) for k, v in mapping.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)

    def domain(self, attribute: str) -> tuple[str, ...]:
        for name, feats in self.attributes:
            if name == attribute:
                return feats
        raise SchemaError(f"unknown attribute {attribute!r}")

    def __contains__(self, attribute) -> bool:
        return attribute in self.names

    def n_objects(self) -> int:
        """Number of distinct full assignments (product of domain sizes)."""
        n = 1
        for _, feats in self.attributes:
            n *= len(feats)
        return n

    def all_objects(self) -> Iterator["ObjectDescription"]:
        for combo in itertools.product(*(feats for _, feats in self.attributes)):
            yield ObjectDescription(tuple(zip(self.names, combo)))

    def to_json(self) -> list:
        return [[name, list(feats)] for name, feats in self.attributes]

    @classmethod
    def from_json(cls, data) -> "AttributeSchema":
        return cls(tuple((name, tuple(feats)) for name, feats in data))


FURNITURE = AttributeSchema((
    (TYPE, ("chair", "sofa", "desk", "fan")),
    (COLOUR, ("blue", "red", "green", "grey")),
    (SIZE, ("large", "small")),
    (ORIENTATION, ("left", "right", "front", "back")),
))


@dataclass(frozen=True)
class ObjectDescription:
    """A fully specified object: one feature per schema attribute.

    ``assignment`` is kept as an ordered tuple of ``(attribute, feature)``
    pairs so objects are hashable; construct from a dict with
    :meth:`from_mapping`.
    """

    assignment: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple((str(a), str(f)) for a, f in self.assignment))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str], schema: AttributeSchema | None = None) -> "ObjectDescription":
        if schema is None:
            return cls(tuple(mapping.items()))
        missing = [a for a in schema.names if a not in mapping]
        if missing:
            raise SchemaError(f"object is missing attribute(s) {missing}")
        return cls(tuple((a, mapping[a]) for a in schema.names))

    def as_dict(self) -> dict[str, str]:
        return dict(self.assignment)

    def __getitem__(self, attribute: str) -> str:
        for a, f in self.assignment:
            if a == attribute:
                return f
        raise KeyError(attribute)

    def get(self, attribute: str, default=None):
        try:
            return self[attribute]
        except KeyError:
            return default

    def violations(self, schema: AttributeSchema) -> list[str]:
        out = []
        attrs = [a for a, _ in self.assignment]
        if len(set(attrs)) != len(attrs):
            out.append("attribute assigned more than once")
        for name in schema.names:
            if name not in attrs:
                out.append(f"missing attribute {name!r}")
        for a, f in self.assignment:
            if a not in schema:
                out.append(f"attribute {a!r} not in schema")
            elif f not in schema.domain(a):
                out.append(f"feature not in domain: {f!r} under {a!r}")
        return out

    def check(self, schema: AttributeSchema) -> None:
        problems = self.violations(schema)
        if problems:
            raise SchemaError("; ".join(problems))


@dataclass(frozen=True)
class ReferenceGame:
    game_id: str
    schema: AttributeSchema
    objects: tuple[ObjectDescription, ...]
    target_index: int

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))

    @property
    def target(self) -> ObjectDescription:
        return self.objects[self.target_index]

    def with_target(self, index: int, game_id: str | None = None) -> "ReferenceGame":
        return ReferenceGame(game_id or self.game_id, self.schema, self.objects, index)


@dataclass(frozen=True)
class Violation:
    object_index: int | None
    rule: str
    detail: str = ""

    def __str__(self):
        where = "game" if self.object_index is None else f"object {self.object_index}"
        return f"{where}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


def validate_game(game: ReferenceGame) -> list[Violation]:
    """Return every invariant violation of ``game``; an empty list means valid."""
    report = []
    if len(game.objects) < 2:
        report.append(Violation(None, "fewer than 2 objects", f"{len(game.objects)} given"))
    for i, obj in enumerate(game.objects):
        for problem in obj.violations(game.schema):
            rule = "feature not in domain" if problem.startswith("feature not in domain") else "schema mismatch"
            report.append(Violation(i, rule, problem))
    if not 0 <= game.target_index < len(game.objects):
        report.append(Violation(game.target_index, "target index out of range"))
    else:
        target = game.objects[game.target_index]
        for i, obj in enumerate(game.objects):
            if i != game.target_index and set(obj.assignment) == set(target.assignment):
                report.append(Violation(game.target_index, "target not uniquely identifiable",
                                        f"identical to object {i}"))
    return report


def realize_description(o: ObjectDescription) -> str:
    """Instantiate ``a <SIZE>, <COLOUR> <TYPE> facing <ORIENTATION>`` for a full object."""
    values = o.as_dict()
    missing = [role for role in TEMPLATE_ROLES if role not in values]
    if missing:
        raise SchemaError(f"object lacks template attribute(s) {missing}")
    return "a {}, {} {} facing {}".format(
        values[SIZE].lower(), values[COLOUR].lower(), values[TYPE].lower(), values[ORIENTATION].lower())


_DESCRIPTION_RE = re.compile(r"^a (\S+), (\S+) (\S+) facing (\S+)$")


def parse_description(text: str, schema: AttributeSchema = FURNITURE) -> ObjectDescription:
    """Inverse of :func:`realize_description` (the template is injective)."""
    m = _DESCRIPTION_RE.match(" ".join(text.strip().lower().split()))
    if not m:
        raise SchemaError(f"not a full object description: {text!r}")
    size, colour, type_, orientation = m.groups()
    values = {TYPE: type_, COLOUR: colour, SIZE: size, ORIENTATION: orientation}
    obj = ObjectDescription.from_mapping(values, schema)
    obj.check(schema)
    return obj
