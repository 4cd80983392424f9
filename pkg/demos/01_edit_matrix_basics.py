"""The edit-matrix view of utterance rewriting, on a two-turn weather chat.

A dialogue turn like "为什么总是这样" ("why is always this") cannot stand on
its own: "这样" points back at "阴天" (cloudy) and the subject "北京"
(Beijing) is dropped entirely. Rewriting is just two edits against the
context, and both fit in one M x N grid over (context word, utterance word)
pairs.
"""

import numpy as np

from editseg import (
    DialogueExample,
    Tokenization,
    build_gold_matrix,
    join_context,
    prepare_incomplete,
    texts,
    tokenize,
)

ctok = lambda s: tokenize(s, Tokenization.PER_CHARACTER)

example = DialogueExample.create(
    context=[ctok("北京今天天气如何"), ctok("北京今天是阴天")],
    incomplete=ctok("为什么总是这样"),
    gold_rewrite=ctok("北京为什么总是阴天"),
)

print("turn 1:", "".join(texts(example.context_utterances[0])))
print("turn 2:", "".join(texts(example.context_utterances[1])))
print("incomplete:", "".join(texts(example.incomplete)))
print("rewrite:   ", "".join(texts(example.gold_rewrite)))

joined = join_context(example)
x_prepared = prepare_incomplete(list(example.incomplete))
print("\njoined context rows (M = %d):" % len(joined), " ".join(texts(joined.tokens)))
print("utterance columns (N+1 = %d):" % len(x_prepared), " ".join(texts(x_prepared)))

matrix, coverage = build_gold_matrix(example)
print(f"\nderived edit matrix ({coverage.name} coverage), 0=None 1=Substitute 2=Insert:")
header = "      " + " ".join(f"{t.text:>2}" for t in x_prepared)
print(header)
for row_label, row in zip(joined.tokens, matrix):
    cells = " ".join(f"{v:>2}" if v else " ." for v in row)
    print(f"{row_label.text:>4}  {cells}")

subs = np.argwhere(matrix == 1)
ins = np.argwhere(matrix == 2)
print("\nSubstitute cells pair the rows of 阴天 with the columns of 这样:")
print(" ", subs.tolist())
print("Insert cells pair the rows of 北京 with column 0 (insert before 为):")
print(" ", ins.tolist())
