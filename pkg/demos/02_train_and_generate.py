"""
Learning a distribution over DFS codes
======================================

Each training graph becomes its minimum DFS code. A stacked LSTM reads the
code tuple by tuple and five softmax heads predict the next tuple's parts.
Sampling runs the network on its own outputs until a component emits EOS.
"""

import tempfile
from pathlib import Path

from graphgen.datagen import read_dataset, split_dataset, tiny_dataset_path
from graphgen.graph import validate_graph
from graphgen.model import (TrainConfig, generate_graphs, history_csv, load_checkpoint,
                            save_checkpoint, train)

graphs = read_dataset(tiny_dataset_path())
split = split_dataset(graphs, (0.8, 0.1, 0.1), seed=0)
print(f"{len(split.train)} train / {len(split.valid)} valid / {len(split.test)} test graphs")

# The desk profile is a 2-layer, 64-unit network that trains in seconds.
cfg = TrainConfig.desk(seed=0)
model, history = train(split.train, split.valid, cfg)
print(f"stopped after {len(history)} epochs; best valid loss "
      f"{min(r.valid_loss for r in history):.3f}")
print(history_csv(history[-3:]))

# Vocabulary sizes bound what can be generated.
v = model.vocab
print(f"dim_t={v.dim_t} node labels={v.node_labels} edge labels={v.edge_labels}")

samples = generate_graphs(model, 10, seed=1)
for g in samples[:5]:
    print(g, g.node_labels)
assert all(validate_graph(g).ok for g in samples)

# Checkpoints are bit-exact.
with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "model.ckpt"
    save_checkpoint(model, path)
    again = load_checkpoint(path)
    assert generate_graphs(again, 10, seed=1) == samples
print("checkpoint round-trip reproduces the same samples")
