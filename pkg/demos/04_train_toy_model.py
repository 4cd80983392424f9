"""Train the segmentation model on a synthetic corpus, then watch it rewrite.

The synthetic task plants a learnable signal: a marker token in the
utterance refers to the context phrase opened by the same marker. Expect
dev exact match to climb well past 0.8 within a couple of minutes on CPU.
"""

import tempfile
from pathlib import Path

from editseg import (
    SyntheticSpec,
    RunConfig,
    generate_synthetic,
    join_context,
    load_model,
    prepare_incomplete,
    rewrite_from_matrix,
    save_dataset,
    texts,
    train,
)
from editseg.model import encode_example

workdir = Path(tempfile.mkdtemp(prefix="editseg-demo-"))
examples = generate_synthetic(SyntheticSpec(num_examples=600, seed=7))
save_dataset(examples[:500], workdir / "train.jsonl")
save_dataset(examples[500:], workdir / "dev.jsonl")
print(f"wrote 500 train / 100 dev examples under {workdir}")

config = RunConfig(
    train_path=str(workdir / "train.jsonl"),
    dev_path=str(workdir / "dev.jsonl"),
    checkpoint_path=str(workdir / "model.run"),
    embed_dim=32,
    hidden_dim=32,
    base_channels=8,
    epochs=50,
    batch_size=16,
    seed=7,
    target_dev_em=0.85,
    target_dev_cell_acc=0.95,
)
result = train(config, log=print)
print(f"\nbest dev EM {result.best_dev_em:.2f}; checkpoint at {result.best_checkpoint}")

model, vocab, conn, k, _, _, _ = load_model(result.best_checkpoint)
print("\nsample rewrites from the dev set:")
for ex in examples[500:506]:
    enc = encode_example(ex, vocab, conn, k)
    matrix = model.predict_encoded(enc)
    out, program = rewrite_from_matrix(
        matrix, prepare_incomplete(list(ex.incomplete)), join_context(ex, conn, k)
    )
    flag = "ok " if texts(out) == texts(ex.gold_rewrite) else "MISS"
    print(f"  [{flag}] {' '.join(texts(ex.incomplete))}")
    print(f"         -> {' '.join(texts(out))}")
    print(f"        gold {' '.join(texts(ex.gold_rewrite))}")
