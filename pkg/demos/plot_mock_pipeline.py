"""
The whole pipeline against the mock model
=========================================

Ten synthetic games go through utterance construction, LLM scoring, both
meaning functions and the RSA speaker, then into the correlation report.
Nothing touches the network.
"""

from rsa_refgame.analysis import evaluate, summary_table
from rsa_refgame.corpus import generate_synthetic
from rsa_refgame.llm import MockClient
from rsa_refgame.meaning import Lexicon, rule_judge
from rsa_refgame.pipeline import build_spaces, score_corpus

lex = Lexicon.default()
corpus = generate_synthetic(seed=1, n_objects=7, n_games=10)
client = MockClient(seed=0, judge=rule_judge(lex))

spaces, stats = build_spaces(corpus, "both", client, k=3)
print(stats)

# %%
# Score every (object, utterance) pair and run RSA at alpha = 1.
out = score_corpus(corpus, spaces, client, ("prompt", "rule"), (1.0,), "word-count", lex)
print(len(out.records), "score records")

# %%
# Per-(game, object) correlations, averaged per utterance type and meaning function.
for row in summary_table(evaluate(out.records, 1.0, ("prompt", "rule"))):
    cells = [f"{row[k]:.3f}" if row[k] is not None else "  -  "
             for k in ("PCC_mean", "PCC_std", "SRCC_mean", "SRCC_std")]
    print(f"{row['utterance_type']:>5} {row['mf_kind']:>6}  " + "  ".join(cells))
