# Train a forest on synthetic text and segment unseen sentences.

import io
import time
import numpy as np

from edurf import persist
from edurf.corpus import read_plain
from edurf.forest import ForestParams, split_counts
from edurf.pipeline import train_model
from edurf.segmenter import render_pipe, render_records, segment_corpus
from edurf.synthetic import generate_corpus

# synthetic rule: a clause-opening cue word after a comma starts a new EDU
docs = generate_corpus(200, seed=42)
print(docs[0].sentences[0].texts)

t = time.perf_counter()
model, summary = train_model(docs, ForestParams(n_trees=100, seed=42))
print(f"trained in {time.perf_counter() - t:.1f}s")
print(summary)

# which features do the trees actually use
counts = split_counts(model)
top = np.argsort(-counts)[:8]
for i in top:
    print(counts[i], model.space.keys[i])

# save, reload, segment plain text
persist.save_model(model, "/tmp/demo_model.bin")
model = persist.load_model("/tmp/demo_model.bin")

text = """#doc demo
The committee met on Tuesday , although several members were travelling .
Results improved which surprised the analysts .
"""
plain = read_plain(io.StringIO(text))
segs = segment_corpus(plain, model)
print(render_pipe(plain[0], segs[0]))
print(render_records(plain[0], segs[0]))

# the probability behind each gap decision
for (si, gap), p in sorted(segs[0].boundary_probs.items()):
    if p > 0.1:
        print(si, gap, plain[0].sentences[si].texts[gap], round(p, 3))
