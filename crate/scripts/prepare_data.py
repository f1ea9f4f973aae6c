#!/usr/bin/env python3
"""Build the local data set used by the examples and the acceptance suite.

Downloads the `pattern3` source distribution from PyPI (it bundles a Penn-tagged
sample of the Open American National Corpus and a Brill tagging lexicon) and
derives four files under `data/`:

  corpus.txt          raw training text, one tokenized sentence per line
  treebank.conllu     held-out sentences with Penn tags mapped to UPOS
  words.txt           dictionary word list, one word per line
  segmentations.tsv   rule-derived morph segmentations `surface<TAB>m1+m2+...`

The corpora are distributed for personal/research use only, so the generated
files are not checked in. Usage: python3 scripts/prepare_data.py [--sdist PATH]
"""

import argparse
import collections
import glob
import os
import random
import subprocess
import sys
import tarfile
import tempfile

TREEBANK_LINES = 5000
MAX_SEG_FORMS = 2500
SEED = 17

PENN_TO_UPOS = {
    "CC": "CCONJ", "CD": "NUM", "DT": "DET", "EX": "PRON", "FW": "X",
    "IN": "ADP", "JJ": "ADJ", "JJR": "ADJ", "JJS": "ADJ", "LS": "X",
    "MD": "AUX", "NN": "NOUN", "NNS": "NOUN", "NNP": "PROPN", "NNPS": "PROPN",
    "PDT": "DET", "POS": "PART", "PRP": "PRON", "PRP$": "PRON", "RB": "ADV",
    "RBR": "ADV", "RBS": "ADV", "RP": "ADP", "SYM": "SYM", "TO": "PART",
    "UH": "INTJ", "VB": "VERB", "VBD": "VERB", "VBG": "VERB", "VBN": "VERB",
    "VBP": "VERB", "VBZ": "VERB", "WDT": "DET", "WP": "PRON", "WP$": "PRON",
    "WRB": "ADV", "$": "SYM", "#": "SYM",
}

SUFFIXES = sorted(
    ["s", "es", "ed", "ing", "er", "est", "ly", "ness", "ment", "ion", "ation",
     "able", "ible", "ful", "less", "ity", "ous", "al", "ic", "ive", "ize",
     "ise", "ism", "ist", "ship", "hood", "ance", "ence", "ant", "ent", "ary",
     "ory", "ish", "en", "y"],
    key=len, reverse=True)
PREFIXES = sorted(
    ["un", "re", "dis", "mis", "in", "im", "non", "pre", "over", "under", "out",
     "sub", "inter", "anti", "de", "co", "trans", "fore", "counter", "super"],
    key=len, reverse=True)


def fetch_sdist(dest):
    subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                           "--no-binary", ":all:", "pattern3==3.0.0", "-d", dest])
    return glob.glob(os.path.join(dest, "pattern3-*.tar.gz"))[0]


def read_member(tar, suffix):
    for m in tar.getmembers():
        if m.name.endswith(suffix):
            return tar.extractfile(m).read().decode("utf-8", "replace")
    raise SystemExit("missing %s in sdist" % suffix)


def parse_tagged(text):
    sents = []
    for line in text.splitlines():
        toks = []
        for item in line.split():
            form, _, tag = item.rpartition("/")
            if form:
                toks.append((form, tag))
        if toks:
            sents.append(toks)
    return sents


def upos(tag):
    if tag in PENN_TO_UPOS:
        return PENN_TO_UPOS[tag]
    return "PUNCT"


def write_conllu(path, sents):
    with open(path, "w", encoding="utf-8") as f:
        for i, s in enumerate(sents):
            f.write("# sent_id = oanc-%d\n" % (i + 1))
            f.write("# text = %s\n" % " ".join(w for w, _ in s))
            for j, (w, t) in enumerate(s):
                f.write("%d\t%s\t_\t%s\t%s\t_\t_\t_\t_\t_\n" % (j + 1, w, upos(t), t))
            f.write("\n")


class Segmenter:
    def __init__(self, lexicon, common):
        self.lex = lexicon
        self.common = common

    def base_rank(self, b):
        """0 = attested word, 1 = word after e/y/doubling repair, None = no base."""
        if len(b) < 3:
            return None
        if b in self.lex:
            return 0
        if len(b) < 4:
            return None
        if b + "e" in self.lex:
            return 1
        if b.endswith("i") and b[:-1] + "y" in self.lex:
            return 1
        if b[-1] == b[-2] and b[:-1] in self.lex:
            return 1
        return None

    def segment(self, w, depth=0):
        if depth > 4:
            return [w]
        best = None
        for suf in SUFFIXES:
            if w.endswith(suf) and len(w) > len(suf):
                base = w[: -len(suf)]
                rank = self.base_rank(base)
                if rank is not None and (best is None or rank < best[0]):
                    best = (rank, base, suf)
        if best is not None:
            return self.segment(best[1], depth + 1) + [best[2]]
        for pre in PREFIXES:
            if w.startswith(pre):
                rest = w[len(pre):]
                if len(rest) >= 4 and rest in self.lex:
                    return [pre] + self.segment(rest, depth + 1)
        for k in range(4, len(w) - 3):
            a, b = w[:k], w[k:]
            if a in self.common and b in self.common:
                return [a] + self.segment(b, depth + 1)
        return [w]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sdist", help="path to pattern3-3.0.0.tar.gz (downloaded if absent)")
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    sdist = args.sdist
    tmp = None
    if not sdist:
        tmp = tempfile.mkdtemp()
        sdist = fetch_sdist(tmp)
    with tarfile.open(sdist) as tar:
        oanc = read_member(tar, "test/corpora/tagged-en-oanc.txt")
        lexicon_txt = read_member(tar, "pattern3/text/en/en-lexicon.txt")

    sents = parse_tagged(oanc)
    tree, lm = sents[:TREEBANK_LINES], sents[TREEBANK_LINES:]
    write_conllu(os.path.join(args.out, "treebank.conllu"), tree)
    with open(os.path.join(args.out, "corpus.txt"), "w", encoding="utf-8") as f:
        for s in lm:
            f.write(" ".join(w for w, _ in s) + "\n")

    words = []
    for line in lexicon_txt.splitlines():
        if line.startswith(";;;") or not line.strip():
            continue
        words.append(line.split()[0])
    with open(os.path.join(args.out, "words.txt"), "w", encoding="utf-8") as f:
        for w in sorted(set(words)):
            f.write(w + "\n")

    freq = collections.Counter(w for s in lm for w, _ in s)
    attested = {w.lower() for w in freq}
    lex = {w.lower() for w in words} & attested
    common = {w.lower() for w, c in freq.items() if c >= 10 and w.isalpha()}
    seg = Segmenter(lex, common & lex)
    forms = sorted(w for w, c in freq.items()
                   if c >= 2 and w.isalpha() and w.islower() and len(w) >= 3)
    complex_, simple = [], []
    for w in forms:
        morphs = seg.segment(w)
        assert "".join(morphs) == w
        (complex_ if len(morphs) > 1 else simple).append((w, morphs))
    rng = random.Random(SEED)
    rng.shuffle(complex_)
    rng.shuffle(simple)
    n_complex = min(len(complex_), MAX_SEG_FORMS * 3 // 4)
    chosen = complex_[:n_complex] + simple[: MAX_SEG_FORMS - n_complex]
    chosen.sort()
    with open(os.path.join(args.out, "segmentations.tsv"), "w", encoding="utf-8") as f:
        f.write("# rule-derived segmentations over corpus word types\n")
        for w, morphs in chosen:
            f.write("%s\t%s\n" % (w, "+".join(morphs)))

    print("treebank sentences: %d (%d tokens)" % (len(tree), sum(map(len, tree))))
    print("corpus sentences:   %d (%d chars)" % (len(lm), sum(len(" ".join(w for w, _ in s)) + 1 for s in lm)))
    print("dictionary words:   %d" % len(set(words)))
    print("segmented forms:    %d (%d multi-morph)" % (len(chosen), n_complex))


if __name__ == "__main__":
    main()
