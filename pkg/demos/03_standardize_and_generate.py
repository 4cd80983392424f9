"""From a ragged predicted matrix to a clean rewrite.

A real model's per-cell predictions are rarely perfect rectangles. The
generator first finds connected regions with the classic two-pass labeling
algorithm (provisional labels + union-find merging), covers each with its
minimal rectangle, resolves overlaps deterministically, and only then edits
the utterance.
"""

import numpy as np

from editseg import (
    DialogueExample,
    EditType,
    apply_edits,
    join_context,
    matrix_to_program,
    min_cover_rect,
    prepare_incomplete,
    texts,
    tokenize,
    two_pass_label,
)

example = DialogueExample.create(
    context=[tokenize("the brown cat slept on the mat")],
    incomplete=tokenize("why did it do that"),
)
c = join_context(example)
x_prepared = prepare_incomplete(list(example.incomplete))

ragged = np.zeros((len(c), len(x_prepared)), dtype=np.int8)
# A ragged (L-shaped) Substitute region around "the brown cat" x "it",
# plus a stray Insert cell: exactly what a noisy prediction looks like.
ragged[0:2, 2] = EditType.SUBSTITUTE
ragged[2, 2] = EditType.SUBSTITUTE
ragged[2, 3] = EditType.SUBSTITUTE  # spills one column to the right
ragged[5:7, 5] = EditType.INSERT  # "the mat" before [E]

print("ragged prediction (rows = context, cols = utterance + [E]):")
for tok, row in zip(c.tokens, ragged):
    print(f"{tok.text:>6} ", " ".join(str(v) if v else "." for v in row))

regions = two_pass_label(ragged)
print(f"\ntwo-pass labeling found {len(regions)} connected regions:")
for region in regions:
    rect = min_cover_rect(region)
    print(
        f"  {region.edit_type.name}: {len(region.cells)} cells ->"
        f" rows [{rect.row_start},{rect.row_end}) cols [{rect.col_start},{rect.col_end})"
    )

program = matrix_to_program(ragged)
print("\nresolved edit program:", program)

out = apply_edits(x_prepared, c, program)
print("\ninput:  ", " ".join(texts(example.incomplete)))
print("output: ", " ".join(texts(out)))
print("\n(the L-shaped region became one covering rectangle, so 'it' and the")
print(" following word are both replaced by 'the brown cat'; the Insert lands")
print(" at the [E] column, appending 'the mat'.)")
