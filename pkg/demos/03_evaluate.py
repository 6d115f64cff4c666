# Two ways to score a segmenter: balanced window classification, and boundaries in running text.

from edurf.corpus import balanced_sample, extract_corpus_windows
from edurf.evaluation import boundary_metrics, classification_metrics
from edurf.features import vectorize
from edurf.forest import ForestParams, predict_proba_many
from edurf.pipeline import fit_windows, train_model
from edurf.segmenter import segment_corpus
from edurf.synthetic import flip_labels, generate_corpus

docs = generate_corpus(250, seed=42)
train, test = docs[:200], docs[200:]
model, _ = train_model(train, ForestParams(n_trees=50, seed=42))

# classification on a balanced set: every boundary window plus as many non-boundaries
windows = balanced_sample(extract_corpus_windows(test), seed=0)
probs = predict_proba_many(model, [vectorize(w, model.space) for w in windows])
print(classification_metrics((p > 0.5, w.label) for w, p in zip(windows, probs)).table("balanced windows"))

# boundaries: every gap of every sentence, micro-averaged over the corpus
segs = segment_corpus(test, model)
print(boundary_metrics(segs, test).table("boundaries"))

# counting sentence starts as boundaries inflates the scores
print(boundary_metrics(segs, test, count_sentence_initial=True).table("boundaries + sentence starts"))

# flip 10% and 25% of training labels; averaging many trees absorbs most of it
for rate in (0.10, 0.25):
    noisy = flip_labels(extract_corpus_windows(train), rate, seed=1)
    m = fit_windows(train, noisy, ForestParams(n_trees=50, seed=42))
    print(rate, float(boundary_metrics(segment_corpus(test, m), test).f1))
