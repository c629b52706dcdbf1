"""Score records and the LLM-vs-RSA correlation analyses built on them."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import RefGameError, UnreachableObjectError
from .rsa import DEFAULT_ALPHAS, ListenerTable, SpeakerConfig, literal_listener, pragmatic_speaker, speaker_for
from .utterance import FEATURE_COUNT, TOKEN_COUNT, WORD_COUNT, UtteranceSpace, utterance_cost
from . import svg

log = logging.getLogger(__name__)

NORMALIZED_PROB = "normalized-prob"
RAW_LOGPROB = "raw-logprob"
LLM_SCORE_MODES = (NORMALIZED_PROB, RAW_LOGPROB)
PROVENANCES = ("logic", "topk", "all")
METRICS = ("PCC", "SRCC")

RECORD_COLUMNS = ("game_id", "object_index", "utterance", "provenance", "cost", "llm_logprob",
                  "llm_prob_norm", "mf_kind", "alpha", "rsa_prob", "is_target")

MIN_GROUP_SIZE = 3
HIST_BIN_WIDTH = 0.05


class AnalysisError(RefGameError):
    pass


@dataclass(frozen=True)
class ScoreRecord:
    game_id: str
    object_index: int
    utterance: str
    provenance: str
    cost: float
    llm_logprob: float
    llm_prob_norm: float
    mf_kind: str
    alpha: float
    rsa_prob: float
    is_target: bool

    def llm_score(self, mode: str) -> float:
        if mode == NORMALIZED_PROB:
            return self.llm_prob_norm
        if mode == RAW_LOGPROB:
            return self.llm_logprob
        raise AnalysisError(f"unknown llm score mode {mode!r}")


# --- correlation primitives -------------------------------------------------

def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Sample Pearson r; ``None`` when either input is constant."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise AnalysisError(f"inputs must be equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise AnalysisError("correlation needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def average_ranks(xs: Sequence[float]) -> np.ndarray:
    return rankdata(np.asarray(xs, dtype=float), method="average")


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Pearson correlation of average ranks (ties share their mean rank)."""
    if len(xs) != len(ys):
        raise AnalysisError("inputs must have equal length")
    if len(xs) < 2:
        raise AnalysisError("correlation needs at least 2 points")
    return pearson(average_ranks(xs), average_ranks(ys))


_METRIC_FN = {"PCC": pearson, "SRCC": spearman}


# --- record assembly -----------------------------------------------------------

def normalize_logprobs(logprobs: Sequence[float]) -> np.ndarray:
    lp = np.asarray(logprobs, dtype=float)
    m = lp.max()
    w = np.exp(lp - m)
    return w / w.sum()


def utterance_costs(space: UtteranceSpace, mode: str, token_counts: Sequence[int] | None = None,
                    lexicon=None) -> np.ndarray:
    if mode == WORD_COUNT:
        return np.array([u.cost for u in space], dtype=float)
    if mode == TOKEN_COUNT:
        if token_counts is None:
            raise AnalysisError("token-count cost mode needs token counts")
        return np.array([max(1, int(n)) for n in token_counts], dtype=float)
    if mode == FEATURE_COUNT:
        return np.array([utterance_cost(u, FEATURE_COUNT, lexicon=lexicon) for u in space], dtype=float)
    raise AnalysisError(f"unknown cost mode {mode!r}")


def build_records(games: Mapping, spaces: Mapping[str, UtteranceSpace], matrices: Mapping,
                  llm_logprobs: Mapping, alphas: Sequence[float], mf_kinds: Sequence[str],
                  cost_mode: str = WORD_COUNT, token_counts: Mapping | None = None, lexicon=None,
                  skip_unreachable: bool = True) -> list[ScoreRecord]:
    """One record per (game, mf kind, alpha, object, utterance).

    ``matrices`` maps ``(game_id, mf_kind)`` to a MeaningMatrix; ``llm_logprobs``
    maps ``(game_id, object_index)`` to total log-probabilities aligned with the
    game's utterance space; ``token_counts`` maps game_id to per-utterance counts.
    """
    out = []
    skipped = 0
    for gid, game in games.items():
        space = spaces[gid]
        if not len(space):
            continue
        n_obj = len(game.objects)
        costs = utterance_costs(space, cost_mode, (token_counts or {}).get(gid), lexicon)
        lps = {o: np.asarray(llm_logprobs[(gid, o)], dtype=float) for o in range(n_obj)}
        norms = {o: normalize_logprobs(lps[o]) for o in range(n_obj)}
        for mf in mf_kinds:
            m = matrices[(gid, mf)]
            if tuple(m.utterances) != tuple(space.texts):
                raise AnalysisError(f"{gid}: {mf} meaning matrix rows do not match the utterance space")
            for alpha in alphas:
                cfg = SpeakerConfig(alpha=alpha, cost_mode=cost_mode)
                try:
                    _, speaker = speaker_for(m, costs, cfg)
                    probs = speaker.probs
                except UnreachableObjectError as exc:
                    if not skip_unreachable:
                        raise
                    # drop the unreachable objects, keep the rest of the game
                    probs, dropped = _speaker_without_unreachable(m, costs, cfg)
                    skipped += dropped
                    log.warning("%s: %s; dropped %d object(s) for mf=%s alpha=%s", gid, exc, dropped, mf, alpha)
                for o in range(n_obj):
                    if probs is None or np.isnan(probs[0, o]):
                        continue
                    for i, u in enumerate(space):
                        out.append(ScoreRecord(gid, o, u.text, u.kind, float(costs[i]), float(lps[o][i]),
                                               float(norms[o][i]), mf, float(alpha), float(probs[i, o]),
                                               o == game.target_index))
    if skipped:
        log.warning("%d (game, object, mf, alpha) columns had no reachable utterance", skipped)
    return out


def _speaker_without_unreachable(m, costs, cfg):
    vals = np.asarray(m.values, dtype=float)
    L = literal_listener(vals, cfg.prior_vector(vals.shape[1]))
    reachable = ((L.probs > 0) & ~L.degenerate[:, None]).any(axis=0)
    probs = np.full(vals.shape, np.nan)
    if reachable.any():
        keep = np.flatnonzero(reachable)
        sub = ListenerTable(L.probs[:, keep], L.degenerate)
        probs[:, keep] = pragmatic_speaker(sub, costs, cfg).probs
    return probs, int((~reachable).sum())


# --- reports ------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationReport:
    grouping: str            # "overall" | "per-group" | "per-group-target"
    metric: str              # "PCC" | "SRCC"
    provenance: str          # "logic" | "topk" | "all"
    mf_kind: str
    alpha: float
    llm_score_mode: str
    value: float | None = None                 # overall only
    n_rows: int = 0
    values: tuple[float, ...] = ()             # per-group only, in group order
    group_keys: tuple = ()
    mean: float | None = None
    std: float | None = None
    n_groups: int = 0
    n_skipped: int = 0
    histogram: tuple[int, ...] = ()
    bin_edges: tuple[float, ...] = ()
    points: tuple = field(default=(), repr=False, compare=False)

    @property
    def key(self) -> tuple:
        return (self.grouping, self.mf_kind, self.provenance, self.metric)

    def to_json(self) -> dict:
        d = {"grouping": self.grouping, "metric": self.metric, "provenance": self.provenance,
             "mf_kind": self.mf_kind, "alpha": self.alpha, "llm_score_mode": self.llm_score_mode}
        if self.grouping == "overall":
            d.update(value=self.value, n_rows=self.n_rows)
        else:
            d.update(mean=self.mean, std=self.std, n_groups=self.n_groups, n_skipped=self.n_skipped,
                     n_rows=self.n_rows, histogram=list(self.histogram), bin_edges=list(self.bin_edges),
                     values=list(self.values))
        return d


def _select(records: Iterable[ScoreRecord], mf: str, alpha: float, provenance: str,
            target_only: bool = False) -> list[ScoreRecord]:
    if provenance not in PROVENANCES:
        raise AnalysisError(f"unknown provenance filter {provenance!r}")
    return [r for r in records
            if r.mf_kind == mf and math.isclose(r.alpha, alpha, rel_tol=0, abs_tol=1e-12)
            and (provenance == "all" or r.provenance == provenance)
            and (r.is_target or not target_only)]


def overall_correlation(records: Sequence[ScoreRecord], mf: str, alpha: float, provenance: str = "all",
                        llm_score_mode: str = NORMALIZED_PROB) -> dict[str, CorrelationReport]:
    """PCC and SRCC over every filtered row, pairing LLM score with RSA speaker probability."""
    rows = _select(records, mf, alpha, provenance)
    if len(rows) < 2:
        raise AnalysisError(f"only {len(rows)} rows for mf={mf} alpha={alpha} provenance={provenance}")
    llm = [r.llm_score(llm_score_mode) for r in rows]
    rsa = [r.rsa_prob for r in rows]
    points = tuple((r.rsa_prob, r.llm_score(llm_score_mode), r.provenance) for r in rows)
    return {metric: CorrelationReport("overall", metric, provenance, mf, alpha, llm_score_mode,
                                      value=fn(llm, rsa), n_rows=len(rows), points=points)
            for metric, fn in _METRIC_FN.items()}


def histogram(values: Sequence[float], width: float = HIST_BIN_WIDTH) -> tuple[tuple[int, ...], tuple[float, ...]]:
    n_bins = int(round(2.0 / width))
    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    counts, _ = np.histogram(np.asarray(values, dtype=float), bins=edges)
    return tuple(int(c) for c in counts), tuple(float(e) for e in edges)


def per_group_correlation(records: Sequence[ScoreRecord], mf: str, alpha: float, provenance: str = "all",
                          llm_score_mode: str = NORMALIZED_PROB, target_only: bool = False,
                          min_size: int = MIN_GROUP_SIZE, bin_width: float = HIST_BIN_WIDTH
                          ) -> dict[str, CorrelationReport]:
    """Correlation within each (game, object) group, summarized by mean, std and histogram.

    Groups smaller than ``min_size`` or with a constant axis are skipped and counted.
    """
    rows = _select(records, mf, alpha, provenance, target_only)
    groups: dict[tuple, list[ScoreRecord]] = {}
    for r in rows:
        groups.setdefault((r.game_id, r.object_index), []).append(r)
    if not groups:
        raise AnalysisError(f"no rows for mf={mf} alpha={alpha} provenance={provenance}")
    out = {}
    for metric, fn in _METRIC_FN.items():
        keys, vals, skipped = [], [], 0
        for key, grp in groups.items():
            if len(grp) < min_size:
                skipped += 1
                continue
            v = fn([r.llm_score(llm_score_mode) for r in grp], [r.rsa_prob for r in grp])
            if v is None:
                skipped += 1
                continue
            keys.append(key)
            vals.append(v)
        if not vals:
            raise AnalysisError(f"all {len(groups)} groups skipped for {metric} mf={mf} provenance={provenance}")
        arr = np.asarray(vals)
        counts, edges = histogram(vals, bin_width)
        out[metric] = CorrelationReport(
            "per-group-target" if target_only else "per-group", metric, provenance, mf, alpha, llm_score_mode,
            n_rows=len(rows), values=tuple(vals), group_keys=tuple(keys), mean=float(arr.mean()),
            std=float(arr.std()), n_groups=len(vals), n_skipped=skipped, histogram=counts, bin_edges=edges)
    return out


def evaluate(records: Sequence[ScoreRecord], alpha: float, mf_kinds: Sequence[str],
             llm_score_mode: str = NORMALIZED_PROB, provenances: Sequence[str] = PROVENANCES
             ) -> dict[tuple, CorrelationReport]:
    """Every report for one alpha, keyed by (grouping, mf_kind, provenance, metric)."""
    reports = {}
    for mf in mf_kinds:
        for prov in provenances:
            for fn, kwargs in ((overall_correlation, {}), (per_group_correlation, {}),
                               (per_group_correlation, {"target_only": True})):
                try:
                    res = fn(records, mf, alpha, prov, llm_score_mode, **kwargs)
                except AnalysisError as exc:
                    log.warning("skipping report: %s", exc)
                    continue
                for rep in res.values():
                    reports[rep.key] = rep
    return reports


def alpha_sweep(records_builder: Callable[[Sequence[float]], Sequence[ScoreRecord]],
                alphas: Sequence[float] = DEFAULT_ALPHAS, mf_kinds: Sequence[str] = ("prompt", "rule"),
                llm_score_mode: str = NORMALIZED_PROB) -> list[tuple[float, dict]]:
    """Rebuild records for each alpha and evaluate them; one entry per alpha, in order."""
    if not alphas:
        raise AnalysisError("alpha list is empty")
    if any(not a > 0 for a in alphas):
        raise AnalysisError("alphas must be positive")
    if len(set(alphas)) != len(alphas):
        raise AnalysisError("alphas must be distinct")
    out = []
    for alpha in alphas:
        recs = records_builder([alpha])
        out.append((float(alpha), evaluate(recs, alpha, mf_kinds, llm_score_mode)))
    return out


def pcc_triples(sweep: Sequence[tuple[float, dict]], mf_kinds: Sequence[str]) -> list[dict]:
    """Overall PCC for (topk, logic, all) per alpha and mf kind."""
    rows = []
    for alpha, reports in sweep:
        for mf in mf_kinds:
            row = {"alpha": alpha, "mf_kind": mf}
            for prov in ("topk", "logic", "all"):
                rep = reports.get(("overall", mf, prov, "PCC"))
                row[prov] = rep.value if rep is not None else None
            rows.append(row)
    return rows


def summary_table(reports: Mapping[tuple, CorrelationReport], mf_kinds: Sequence[str] = ("prompt", "rule"),
           grouping: str = "per-group") -> list[dict]:
    """Rows (utterance type x MF) with PCC and SRCC mean/std across groups."""
    rows = []
    for prov in ("logic", "topk", "all"):
        for mf in mf_kinds:
            row = {"utterance_type": prov, "mf_kind": mf}
            for metric in METRICS:
                rep = reports.get((grouping, mf, prov, metric))
                row[f"{metric}_mean"] = rep.mean if rep else None
                row[f"{metric}_std"] = rep.std if rep else None
            rows.append(row)
    return rows


# --- persistence --------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_tsv(records: Iterable[ScoreRecord], manifest_hash: str | None = None) -> str:
    buf = io.StringIO()
    if manifest_hash:
        buf.write(f"# manifest_sha256: {manifest_hash}\n")
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in RECORD_COLUMNS])
    return buf.getvalue()


def read_records(path) -> list[ScoreRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines, delimiter="\t")
    out = []
    for row in reader:
        out.append(ScoreRecord(row["game_id"], int(row["object_index"]), row["utterance"], row["provenance"],
                               float(row["cost"]), float(row["llm_logprob"]), float(row["llm_prob_norm"]),
                               row["mf_kind"], float(row["alpha"]), float(row["rsa_prob"]),
                               row["is_target"] == "1"))
    return out


def _tsv(rows: list[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _slug(x) -> str:
    return str(x).replace(".", "p")


def emit_report(reports: Mapping[tuple, CorrelationReport], records: Sequence[ScoreRecord], out_dir,
                manifest_hash: str | None = None, sweep: Sequence[tuple[float, dict]] | None = None,
                mf_kinds: Sequence[str] = ("prompt", "rule"), extra: Mapping | None = None) -> list[Path]:
    """Write records, summaries and SVG plots; output is byte-stable for identical inputs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    put("records.tsv", records_to_tsv(records, manifest_hash))
    ordered = [reports[k].to_json() for k in sorted(reports)]
    put("summary.json", json.dumps({"manifest_sha256": manifest_hash, "reports": ordered, **(extra or {})},
                                   indent=1, sort_keys=True) + "\n")
    t3_cols = ("utterance_type", "mf_kind", "PCC_mean", "PCC_std", "SRCC_mean", "SRCC_std")
    header = f"# manifest_sha256: {manifest_hash}\n" if manifest_hash else ""
    put("group_summary.tsv", header + _tsv(summary_table(reports, mf_kinds), t3_cols))
    put("group_summary_target_only.tsv", header + _tsv(summary_table(reports, mf_kinds, "per-group-target"), t3_cols))
    if sweep is not None:
        put("alpha_pcc.tsv", header + _tsv(pcc_triples(sweep, mf_kinds), ("alpha", "mf_kind", "topk", "logic", "all")))
        put("alpha_sweep.json", json.dumps(
            {"manifest_sha256": manifest_hash,
             "sweep": [{"alpha": a, "reports": [reps[k].to_json() for k in sorted(reps)]} for a, reps in sweep]},
            indent=1, sort_keys=True) + "\n")

    for key in sorted(reports):
        rep = reports[key]
        grouping, mf, prov, metric = key
        if grouping == "overall" and metric == "PCC" and prov == "all":
            put(f"scatter_{mf}_alpha{_slug(rep.alpha)}.svg",
                svg.scatter(rep.points, title=f"LLM vs RSA ({mf} MF, alpha={rep.alpha})",
                            xlabel="RSA speaker probability", ylabel=f"LLM score ({rep.llm_score_mode})",
                            manifest_hash=manifest_hash))
        elif grouping == "per-group":
            put(f"hist_{mf}_{metric}_{prov}.svg",
                svg.histogram(rep.histogram, rep.bin_edges, title=f"{metric} per group ({mf} MF, {prov})",
                              manifest_hash=manifest_hash))
    return written
