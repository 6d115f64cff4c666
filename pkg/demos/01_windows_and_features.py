# Candidate windows and the features built from them.
# Every gap between two tokens of a sentence is one candidate boundary.

from edurf.corpus import Sentence, extract_corpus_windows, extract_windows, tokenize_texts
from edurf.features import build_feature_space, char_subsequences, vectorize
from edurf.synthetic import generate_corpus

texts = tokenize_texts("Prices fell sharply, because demand collapsed after the holidays.")
print(texts)

# gold boundary before "because" (gap 4 = between token 3 and token 4)
sent = Sentence.from_texts(texts, {4})
windows = extract_windows(sent)
print(len(texts), "tokens ->", len(windows), "windows")

# B = three tokens before the gap, L = three after, C = the next three
for w in windows[2:6]:
    print(w.gap, w.before, w.leading, w.continuing, "boundary" if w.label else "")

# char n-grams: substrings of length 2..4 of the lowercased token with ^ and $ added
print(sorted(char_subsequences("Because"))[:10])

# filtering and indexing need a corpus: char n-grams must occur in 2..50% of documents,
# so windows have to know which document they came from
docs = generate_corpus(30, seed=1)
space = build_feature_space(docs, extract_corpus_windows(docs))
print(len(space), "features kept")
for line in space.dump_tsv().splitlines()[:6]:
    print(line)

# a window becomes the sorted indices of the features present in it
w = windows[3]
v = vectorize(w, space)
print(v)
print([space.keys[i] for i in v][:8])
