"""The evaluation metrics, with the arithmetic spelled out.

Rewriting P/R/F is the task-specific one: ordinary BLEU barely moves when a
model copies nothing from the context (returning the input already scores
high), so the rewriting scores count only n-grams that contain at least one
word the model had to copy from the context.
"""

from editseg.metrics import bleu_n, evaluate_corpus, exact_match, rewriting_prf, rouge_l, rouge_n

pred = "why is beijing always this".split()
ref = "why is beijing always cloudy".split()
context = "beijing is cloudy today".split()
incomplete = "why is always this".split()

print("pred:", pred)
print("ref: ", ref)

print("\nBLEU (cumulative, corpus-level, no smoothing):")
for n in (1, 2, 3, 4):
    print(f"  BLEU-{n} = {bleu_n([pred], [ref], n):.4f}")
print("  e.g. BLEU-2 = sqrt(p1 * p2) with p1 = 4/5 and p2 = 3/4")

print("\nROUGE (macro-averaged F1):")
print(f"  ROUGE-1 = {rouge_n([pred], [ref], 1):.4f}")
print(f"  ROUGE-2 = {rouge_n([pred], [ref], 2):.4f}")
print(f"  ROUGE-L = {rouge_l([pred], [ref]):.4f}")

print(f"\nexact match = {exact_match([pred], [ref]):.1f} (strictest; all-or-nothing)")

print("\nrewriting P/R/F over context-word n-grams:")
for n in (1, 2):
    p, r, f = rewriting_prf([pred], [ref], [context], [incomplete], n)
    print(f"  n={n}: P={p:.3f} R={r:.3f} F1={f:.3f}")
print("  context-only words here are {beijing, cloudy, today}: the prediction")
print("  copied 'beijing' but missed 'cloudy', so recall drops while BLEU-1")
print("  still reads a friendly 0.8.")

print("\nfull report on a two-example corpus:")
report = evaluate_corpus(
    [pred, ref], [ref, ref], [context, context], [incomplete, incomplete]
)
import json

print(json.dumps(report.to_dict(), indent=2))
