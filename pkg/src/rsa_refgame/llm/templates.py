"""Prompt templates with named placeholders and stable content hashes."""

from __future__ import annotations

import hashlib
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import TemplateError
from ..world import ReferenceGame, realize_description

# Joins a rendered context and the utterance being scored or generated.
CONTINUATION_SEPARATOR = " "


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    @property
    def placeholders(self) -> tuple[str, ...]:
        names = []
        for _, field_name, _, _ in string.Formatter().parse(self.text):
            if field_name is None:
                continue
            if not field_name.isidentifier():
                raise TemplateError(f"template {self.name!r}: unsupported placeholder {{{field_name}}}")
            if field_name not in names:
                names.append(field_name)
        return tuple(names)

    def render(self, **values) -> str:
        missing = [p for p in self.placeholders if p not in values]
        if missing:
            raise TemplateError(f"template {self.name!r}: unresolved placeholder(s) {missing}")
        return self.text.format(**{p: values[p] for p in self.placeholders})

    @classmethod
    def from_file(cls, path) -> "PromptTemplate":
        p = Path(path)
        return cls(p.stem, p.read_text(encoding="utf-8"))


def builtin_template(name: str) -> PromptTemplate:
    """Load one of the shipped templates: ``topk``, ``mf-3shot`` or ``mf-6shot``."""
    filename = {"topk": "topk.txt", "mf-3shot": "mf_3shot.txt", "mf-6shot": "mf_6shot.txt"}.get(name)
    if filename is None:
        raise TemplateError(f"no built-in template named {name!r}")
    text = resources.files("rsa_refgame.data").joinpath("templates", filename).read_text(encoding="utf-8")
    return PromptTemplate(name, text)


def meaning_template(shots: int) -> PromptTemplate:
    if shots not in (3, 6):
        raise TemplateError(f"no {shots}-shot meaning template; use 3 or 6")
    return builtin_template(f"mf-{shots}shot")


def render_context(game: ReferenceGame, template: PromptTemplate | None = None) -> str:
    """Prompt listing every object of the game, marking the target."""
    template = template or builtin_template("topk")
    lines = []
    for i, obj in enumerate(game.objects):
        marker = " (target)" if i == game.target_index else ""
        lines.append(f"{i + 1}. {realize_description(obj)}{marker}")
    return template.render(
        world_description="\n".join(lines),
        target_description=realize_description(game.target),
        n_objects=len(game.objects),
    )
