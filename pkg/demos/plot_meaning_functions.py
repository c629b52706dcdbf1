"""
Rule-based versus prompt-based meaning
======================================

The rule checks each word against the object's features through a lexicon.
Anything it does not know, like "not", is ignored. The prompt-based meaning
asks a language model whether the description fits and reads off
P(Yes) / (P(Yes) + P(No)); here the offline mock stands in for the model.
"""

from rsa_refgame.llm import MockClient
from rsa_refgame.meaning import (Lexicon, bundled_labels, evaluate_mf, load_labels, prompt_meaning, rule_judge,
                                 rule_meaning, sweep_threshold)
from rsa_refgame.world import parse_description

lex = Lexicon.default()
chair = parse_description("a small, grey chair facing back")
for text in ("a grey chair", "a tiny gray armchair", "a chair facing forwards",
             "the small grey chair that is not facing forwards"):
    print(f"{rule_meaning(text, chair, lex)}  {text}")

# %%
# Evaluate both on the hand-labelled free-text pairs. The mock's judge follows
# the rule, so it inherits the negation blind spot.
rows = load_labels(bundled_labels("topk"))
objects = [parse_description(r["object"]) for r in rows]
truth = [r["label"] for r in rows]
rule = evaluate_mf([rule_meaning(r["utterance"], o, lex) for r, o in zip(rows, objects)], truth)
print("rule:", rule.to_json())

client = MockClient(seed=0, judge=rule_judge(lex))
scores = [prompt_meaning(r["utterance"], o, client) for r, o in zip(rows, objects)]
threshold, prompt = sweep_threshold(scores, truth)
print(f"prompt (threshold {threshold:.3f}):", prompt.to_json())
