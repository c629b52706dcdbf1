"""Literal listener and pragmatic speaker over a meaning matrix.

Tables are numpy arrays indexed ``[utterance, object]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, RefGameError, UnreachableObjectError
from .utterance import COST_MODES, WORD_COUNT

DEFAULT_ALPHAS = (0.2, 0.6, 1.0, 1.4, 1.8, 3.0)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpeakerConfig:
    alpha: float = 1.0
    cost_mode: str = WORD_COUNT
    prior: tuple[float, ...] | None = None  # None means uniform

    def __post_init__(self):
        if not self.alpha > 0:
            raise RefGameError(f"alpha must be positive, got {self.alpha}")
        if self.cost_mode not in COST_MODES:
            raise RefGameError(f"unknown cost mode {self.cost_mode!r}")
        if self.prior is not None:
            p = np.asarray(self.prior, dtype=float)
            if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
                raise RefGameError("prior must be non-negative and sum to 1")
            object.__setattr__(self, "prior", tuple(float(x) for x in p))

    def prior_vector(self, n_objects: int) -> np.ndarray:
        if self.prior is None:
            return np.full(n_objects, 1.0 / n_objects)
        if len(self.prior) != n_objects:
            raise DimensionError(f"prior has {len(self.prior)} entries for {n_objects} objects")
        return np.asarray(self.prior)


@dataclass(frozen=True)
class ListenerTable:
    probs: np.ndarray       # [utterance, object]; degenerate rows are all zero
    degenerate: np.ndarray  # bool per utterance

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs))
        d = np.array(self.degenerate, dtype=bool)
        d.setflags(write=False)
        object.__setattr__(self, "degenerate", d)

    @property
    def shape(self):
        return self.probs.shape


@dataclass(frozen=True)
class SpeakerTable:
    probs: np.ndarray  # [utterance, object]; each column sums to 1

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs))

    def column(self, o: int) -> np.ndarray:
        return self.probs[:, o]

    def argmax_set(self, o: int, tol: float = 0.0) -> tuple[int, ...]:
        """Indices of the most probable utterances for object ``o``; ties are all returned."""
        col = self.probs[:, o]
        top = col.max()
        return tuple(int(i) for i in np.flatnonzero(col >= top - tol))


def literal_listener(meaning, prior=None) -> ListenerTable:
    """Row u is M(u, .) * P(.) normalized; all-zero rows are flagged degenerate.

    ``meaning`` is a MeaningMatrix or a 2-D array; ``prior`` defaults to uniform.
    """
    m = np.asarray(getattr(meaning, "values", meaning), dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"meaning matrix must be 2-D, got shape {m.shape}")
    n_obj = m.shape[1]
    p = np.full(n_obj, 1.0 / n_obj) if prior is None else np.asarray(prior, dtype=float)
    if p.shape != (n_obj,):
        raise DimensionError(f"prior of shape {p.shape} does not match {n_obj} objects")
    joint = m * p
    mass = joint.sum(axis=1)
    degenerate = mass <= 0
    probs = np.zeros_like(joint)
    ok = ~degenerate
    probs[ok] = joint[ok] / mass[ok, None]
    return ListenerTable(probs, degenerate)


def pragmatic_speaker(listener: ListenerTable, costs: Sequence[float], cfg: SpeakerConfig | float = 1.0) -> SpeakerTable:
    """Column o is (L(o|u) / |u|)^alpha over non-degenerate u, normalized.

    Computed as alpha * (ln L - ln |u|) with the column max subtracted before
    exponentiating.
    """
    alpha = cfg.alpha if isinstance(cfg, SpeakerConfig) else float(cfg)
    if not alpha > 0:
        raise RefGameError(f"alpha must be positive, got {alpha}")
    L = listener.probs
    c = np.asarray(costs, dtype=float)
    if c.shape != (L.shape[0],):
        raise DimensionError(f"{c.shape[0] if c.ndim else 0} costs for {L.shape[0]} utterances")
    if (c <= 0).any():
        raise RefGameError("utterance costs must be positive")

    live = (L > 0) & ~listener.degenerate[:, None]
    with np.errstate(divide="ignore"):
        logits = np.where(live, alpha * (np.log(L) - np.log(c)[:, None]), -np.inf)
    reachable = live.any(axis=0)
    if not reachable.all():
        raise UnreachableObjectError(int(np.flatnonzero(~reachable)[0]))
    logits = logits - logits.max(axis=0, keepdims=True)
    w = np.exp(logits)
    return SpeakerTable(w / w.sum(axis=0, keepdims=True))


def speaker_entropy(speaker: SpeakerTable, o: int) -> float:
    """Shannon entropy (nats) of the speaker's distribution for object ``o``."""
    col = speaker.probs[:, o]
    nz = col[col > 0]
    return float(max(0.0, -(nz * np.log(nz)).sum()))


def speaker_for(meaning, costs, cfg: SpeakerConfig) -> tuple[ListenerTable, SpeakerTable]:
    """Listener and speaker for one game in a single call."""
    m = np.asarray(getattr(meaning, "values", meaning), dtype=float)
    L = literal_listener(m, cfg.prior_vector(m.shape[1]))
    return L, pragmatic_speaker(L, costs, cfg)
