"""Command-line entry point: ingest -> utterances -> score -> analyze, plus eval-mf and sweep-alpha.

Every command writes a ``manifest.json`` (or ``<out>.manifest.json``) next
to its outputs, and every output carries that manifest's hash in a header.
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

from . import analysis, corpus as corpus_mod
from .errors import RefGameError
from .llm import ClientConfig, MockClient, OpenAICompatibleClient, PromptTemplate, builtin_template, meaning_template
from .meaning import (MF_KINDS, PROMPT, RULE, Lexicon, bundled_labels, degenerate_counts, evaluate_mf, load_labels,
                      prompt_meaning, read_matrices, rule_judge, rule_meaning, sweep_threshold, write_matrices)
from .pipeline import (DEFAULT_K, DEFAULT_STARTS, RunManifest, build_spaces, logprobs_from_rows, read_jsonl,
                       score_corpus, sha256_file, write_jsonl)
from .rsa import DEFAULT_ALPHAS
from .utterance import COST_MODES, WORD_COUNT, read_spaces, write_spaces
from .world import FURNITURE, parse_description

log = logging.getLogger("rsa_refgame")


# --- shared argument groups ------------------------------------------------------

def _add_client_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("language model")
    g.add_argument("--mock", action="store_true", help="use the deterministic offline mock client")
    g.add_argument("--seed", type=int, default=0, help="mock seed")
    g.add_argument("--base-url", default=ClientConfig.base_url)
    g.add_argument("--model", default=ClientConfig.model)
    g.add_argument("--api-key-env", default=ClientConfig.api_key_env,
                   help="name of the environment variable holding the API key")
    g.add_argument("--timeout", type=float, default=ClientConfig.timeout)
    g.add_argument("--max-retries", type=int, default=ClientConfig.max_retries)
    g.add_argument("--max-concurrent", type=int, default=ClientConfig.max_concurrent)
    g.add_argument("--cache-dir", default=None)
    g.add_argument("--top-n", type=int, default=ClientConfig.top_n)
    g.add_argument("--offline", action="store_true", help="replay from --cache-dir only")
    g.add_argument("--sampling-fallback", action="store_true",
                   help="repeated sampling instead of beam search for top-k generation")


def _lexicon(args) -> Lexicon:
    lex = Lexicon.from_file(args.lexicon) if getattr(args, "lexicon", None) else Lexicon.default()
    lex.check(FURNITURE)
    return lex


def _client(args, lexicon: Lexicon | None = None):
    if args.mock:
        return MockClient(seed=args.seed, judge=rule_judge(lexicon) if lexicon is not None else None)
    cfg = ClientConfig(base_url=args.base_url, model=args.model, api_key_env=args.api_key_env,
                       timeout=args.timeout, max_retries=args.max_retries, max_concurrent=args.max_concurrent,
                       cache_dir=args.cache_dir, top_n=args.top_n, offline=args.offline,
                       sampling_fallback=args.sampling_fallback)
    return OpenAICompatibleClient(cfg)


def _template(path, default: PromptTemplate) -> PromptTemplate:
    return PromptTemplate.from_file(path) if path else default


def _echo(obj) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True))


# --- commands ---------------------------------------------------------------------

def cmd_ingest(args) -> int:
    if args.synthetic:
        corpus = corpus_mod.generate_synthetic(args.seed, FURNITURE, args.objects, args.games)
        settings = {"source": "synthetic", "seed": args.seed, "games": args.games, "objects": args.objects}
        errors = []
    elif args.tuna_dir:
        res = corpus_mod.load_corpus(args.tuna_dir, FURNITURE, skip_bad=args.skip_bad)
        corpus, errors = res if args.skip_bad else (res, [])
        settings = {"source": "tuna", "skip_bad": args.skip_bad}
    else:
        raise RefGameError("give --tuna-dir or --synthetic")
    manifest = RunManifest("ingest", corpus_hash=corpus_mod.corpus_hash(corpus), settings=settings)
    out = Path(args.out)
    manifest.write(out.with_name(out.name + ".manifest.json"))
    corpus_mod.save_corpus(corpus, out, manifest.header())
    stats = corpus.stats()
    stats["skipped_files"] = len(errors)
    for path, msg in errors:
        log.warning("skipped %s: %s", path, msg)
    _echo(stats)
    return 0


def cmd_utterances(args) -> int:
    corpus = corpus_mod.read_corpus(args.corpus)
    template = _template(args.template, builtin_template("topk"))
    client = _client(args) if args.mode != "logic" else None
    endpoint = client.identity() if client is not None else {"kind": "none"}
    manifest = RunManifest("utterances", corpus_hash=corpus_mod.corpus_hash(corpus), endpoint=endpoint,
                           template_hashes={"topk": template.hash} if client else {},
                           k=args.k if client else "n/a", starts=list(args.starts) if client else "n/a",
                           settings={"mode": args.mode}, inputs={"corpus": sha256_file(args.corpus)})
    spaces, stats = build_spaces(corpus, args.mode, client, args.k, args.starts, template)
    out = Path(args.out)
    manifest.write(out.with_name(out.name + ".manifest.json"))
    write_spaces(spaces.values(), out, manifest.header())
    _echo(stats)
    return 0


def cmd_score(args) -> int:
    corpus = corpus_mod.read_corpus(args.corpus)
    schemas = {g.game_id: g.schema for g in corpus.games}
    spaces = read_spaces(args.spaces, schemas)
    missing = [g.game_id for g in corpus.games if g.game_id not in spaces]
    if missing:
        raise RefGameError(f"no utterance space for {len(missing)} game(s), e.g. {missing[0]!r}")
    lexicon = _lexicon(args)
    client = _client(args, lexicon)
    topk_t = _template(args.template, builtin_template("topk"))
    mf_t = _template(args.mf_template, meaning_template(args.shots))
    alphas = [float(a) for a in args.alphas]
    manifest = RunManifest(
        "score", corpus_hash=corpus_mod.corpus_hash(corpus), lexicon_hash=lexicon.hash,
        template_hashes={"topk": topk_t.hash, f"mf-{args.shots}shot": mf_t.hash}, endpoint=client.identity(),
        alphas=alphas, cost_mode=args.cost_mode,
        settings={"mf_kinds": list(args.mf), "shots": args.shots, "paper_faithful": args.paper_faithful,
                  "mf_template_text": mf_t.text, "topk_template_text": topk_t.text},
        inputs={"corpus": sha256_file(args.corpus), "spaces": sha256_file(args.spaces)})
    res = score_corpus(corpus, spaces, client, args.mf, alphas, args.cost_mode, lexicon, args.shots,
                       args.paper_faithful, topk_t, mf_t)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest.write(out / "manifest.json")
    header = manifest.header()
    shutil.copyfile(args.corpus, out / "corpus.jsonl")
    shutil.copyfile(args.spaces, out / "spaces.jsonl")
    (out / "lexicon.tsv").write_text(lexicon.to_tsv(), encoding="utf-8")
    write_jsonl(res.llm_rows, out / "llm_scores.jsonl", header)
    if res.token_counts:
        write_jsonl([{"game_id": g, "token_counts": c} for g, c in res.token_counts.items()],
                    out / "token_counts.jsonl", header)
    write_matrices(res.matrices.values(), out / "matrices.jsonl", header)
    (out / "records.tsv").write_text(analysis.records_to_tsv(res.records, manifest.sha256), encoding="utf-8")
    _echo({"records": len(res.records), "llm_scores": len(res.llm_rows), "matrices": len(res.matrices),
           "degenerate_utterances": degenerate_counts(res.matrices.values())})
    return 0


class ScoresDir:
    """A finished ``score`` output directory, reloaded for analysis or sweeps."""

    def __init__(self, path):
        self.path = Path(path)
        self.manifest = RunManifest.read(self.path / "manifest.json")
        self.corpus = corpus_mod.read_corpus(self.path / "corpus.jsonl")
        self.games = {g.game_id: g for g in self.corpus.games}
        self.spaces = read_spaces(self.path / "spaces.jsonl", {g: x.schema for g, x in self.games.items()})
        self.mf_kinds = self.manifest.settings["mf_kinds"]
        self.cost_mode = self.manifest.cost_mode

    def records(self):
        return analysis.read_records(self.path / "records.tsv")

    def records_builder(self):
        matrices = {(gid, kind): m for (gid, kind, _), m in read_matrices(self.path / "matrices.jsonl").items()}
        logprobs = logprobs_from_rows(read_jsonl(self.path / "llm_scores.jsonl"), self.spaces)
        tokens = {}
        if (self.path / "token_counts.jsonl").exists():
            tokens = {r["game_id"]: r["token_counts"] for r in read_jsonl(self.path / "token_counts.jsonl")}
        lexicon = Lexicon.from_file(self.path / "lexicon.tsv")

        def build(alphas):
            return analysis.build_records(self.games, self.spaces, matrices, logprobs, alphas, self.mf_kinds,
                                          self.cost_mode, tokens, lexicon)
        return build


def _analysis_manifest(stage, scores: ScoresDir, alphas, mode) -> RunManifest:
    m = scores.manifest
    return RunManifest(stage, corpus_hash=m.corpus_hash, lexicon_hash=m.lexicon_hash,
                       template_hashes=m.template_hashes, endpoint=m.endpoint, k=m.k, starts=m.starts,
                       alphas=list(alphas), cost_mode=m.cost_mode, llm_score_mode=mode,
                       settings={"mf_kinds": scores.mf_kinds, "min_group_size": analysis.MIN_GROUP_SIZE,
                                 "hist_bin_width": analysis.HIST_BIN_WIDTH},
                       inputs={"scores_manifest": m.sha256,
                               "records": sha256_file(scores.path / "records.tsv")})


def _run_analysis(args, sweep_alphas) -> int:
    scores = ScoresDir(args.scores)
    alpha = float(args.alpha)
    alphas = sorted({alpha, *sweep_alphas}) if sweep_alphas else [alpha]
    manifest = _analysis_manifest("analyze" if not sweep_alphas else "sweep-alpha", scores, alphas,
                                  args.llm_score_mode)
    stored = scores.records()
    if any(abs(r.alpha - alpha) < 1e-12 for r in stored):
        records = [r for r in stored if abs(r.alpha - alpha) < 1e-12]
    else:
        records = scores.records_builder()([alpha])
    reports = analysis.evaluate(records, alpha, scores.mf_kinds, args.llm_score_mode)
    sweep = None
    if sweep_alphas:
        builder = scores.records_builder()
        sweep = analysis.alpha_sweep(builder, sweep_alphas, scores.mf_kinds, args.llm_score_mode)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest.write(out / "manifest.json")
    degenerate = degenerate_counts(read_matrices(scores.path / "matrices.jsonl").values())
    analysis.emit_report(reports, records, out, manifest.sha256, sweep, scores.mf_kinds,
                         extra={"degenerate_utterances": degenerate})
    summary = {"summary_table": analysis.summary_table(reports, scores.mf_kinds)}
    if sweep is not None:
        summary["alpha_pcc"] = analysis.pcc_triples(sweep, scores.mf_kinds)
    _echo(summary)
    return 0


def cmd_analyze(args) -> int:
    return _run_analysis(args, [float(a) for a in args.alphas] if args.sweep_alpha else None)


def cmd_sweep_alpha(args) -> int:
    return _run_analysis(args, [float(a) for a in args.alphas])


def cmd_eval_mf(args) -> int:
    path = args.labels or bundled_labels(args.bundled)
    rows = load_labels(path)
    lexicon = _lexicon(args)
    truth = [r["label"] for r in rows]
    objects = [parse_description(r["object"], FURNITURE) for r in rows]
    result = {"labels": str(path), "n_pairs": len(rows), "lexicon_hash": lexicon.hash, "results": {}}
    client = None
    if PROMPT in args.mf:
        client = _client(args, lexicon)
    manifest = RunManifest("eval-mf", lexicon_hash=lexicon.hash,
                           endpoint=client.identity() if client else {"kind": "none"},
                           settings={"mf": list(args.mf), "shots": list(args.shots)},
                           inputs={"labels": sha256_file(path)})
    if RULE in args.mf:
        pred = [rule_meaning(r["utterance"], o, lexicon) for r, o in zip(rows, objects)]
        result["results"]["rule"] = evaluate_mf(pred, truth).to_json()
    if client is not None:
        for shots in args.shots:
            t = meaning_template(shots)
            manifest.template_hashes[f"mf-{shots}shot"] = t.hash
            scores = client.map(lambda pair: prompt_meaning(pair[0]["utterance"], pair[1], client, shots, t),
                                list(zip(rows, objects)))
            _, report = sweep_threshold(scores, truth)
            result["results"][f"prompt-{shots}shot"] = report.to_json()
    result["manifest_sha256"] = manifest.sha256
    out = Path(args.out) if args.out else None
    if out is not None:
        manifest.write(out.with_name(out.name + ".manifest.json"))
        out.write_text(json.dumps(result, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    _echo(result)
    return 0


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsa-refgame", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="build a canonical corpus file")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--tuna-dir")
    src.add_argument("--synthetic", action="store_true")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--games", type=int, default=10)
    s.add_argument("--objects", type=int, default=7)
    s.add_argument("--skip-bad", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("utterances", help="construct utterance spaces")
    s.add_argument("--corpus", required=True)
    s.add_argument("--mode", choices=("logic", "topk", "both"), default="both")
    s.add_argument("--k", type=int, default=DEFAULT_K, help="candidates per start token")
    s.add_argument("--starts", nargs="+", default=list(DEFAULT_STARTS))
    s.add_argument("--template", help="top-k prompt template file")
    s.add_argument("--out", required=True)
    _add_client_args(s)
    s.set_defaults(func=cmd_utterances)

    s = sub.add_parser("score", help="LLM scores, meaning matrices and RSA speaker probabilities")
    s.add_argument("--corpus", required=True)
    s.add_argument("--spaces", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--mf", nargs="+", choices=MF_KINDS, default=list(MF_KINDS))
    s.add_argument("--alphas", nargs="+", type=float, default=list(DEFAULT_ALPHAS))
    s.add_argument("--cost-mode", choices=COST_MODES, default=WORD_COUNT)
    s.add_argument("--shots", type=int, choices=(3, 6), default=3)
    s.add_argument("--lexicon")
    s.add_argument("--template", help="top-k/scoring context template file")
    s.add_argument("--mf-template", help="meaning-function prompt template file")
    faith = s.add_mutually_exclusive_group()
    faith.add_argument("--paper-faithful", action="store_true",
                       help="reuse generation scores for top-k utterances under their own target")
    faith.add_argument("--rescore-all", dest="paper_faithful", action="store_false")
    _add_client_args(s)
    s.set_defaults(func=cmd_score)

    for name, func, help_ in (("analyze", cmd_analyze, "correlation reports"),
                              ("sweep-alpha", cmd_sweep_alpha, "per-alpha correlation reports")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--scores", required=True, help="output directory of the score command")
        s.add_argument("--out-dir", required=True)
        s.add_argument("--alpha", type=float, default=1.0)
        s.add_argument("--alphas", nargs="+", type=float, default=list(DEFAULT_ALPHAS))
        s.add_argument("--llm-score-mode", choices=analysis.LLM_SCORE_MODES, default=analysis.NORMALIZED_PROB)
        if name == "analyze":
            s.add_argument("--sweep-alpha", action="store_true")
        s.set_defaults(func=func)

    s = sub.add_parser("eval-mf", help="evaluate meaning functions against labelled pairs")
    lab = s.add_mutually_exclusive_group(required=True)
    lab.add_argument("--labels")
    lab.add_argument("--bundled", choices=("logic", "topk"))
    s.add_argument("--mf", nargs="+", choices=MF_KINDS, default=[RULE])
    s.add_argument("--shots", nargs="+", type=int, choices=(3, 6), default=[3])
    s.add_argument("--lexicon")
    s.add_argument("--out")
    _add_client_args(s)
    s.set_defaults(func=cmd_eval_mf)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RefGameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
