#!/usr/bin/env python3
"""Independent reference computations for the frozen expected values used in
the C++ metric tests.

Everything here is implemented from the metric definitions directly (exact
fractions where possible), not from the C++ sources. Run it to regenerate the
constants pasted into tests/test_metrics.cpp and tests/acceptance_main.cpp.
"""

import math
from fractions import Fraction

# --- tokenizer: ASCII lowercase, tokens are maximal runs of [A-Za-z0-9] or
# bytes >= 0x80; everything else separates. Matches cmos::tokenize.


def tokenize(s: str) -> list[str]:
    out, cur = [], []
    for ch in s:
        o = ord(ch)
        if ch.isascii() and (ch.isalnum()):
            cur.append(ch.lower())
        elif o >= 0x80:
            cur.append(ch)
        else:
            if cur:
                out.append("".join(cur))
                cur = []
    if cur:
        out.append("".join(cur))
    return out


# --- BLEU-4: orders 1..min(4, len(cand)), uniform weights over used orders,
# clipped modified precision, epsilon 1e-9 on zero numerators, standard BP.


def ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def bleu4(cand: str, refs: list[str]) -> float:
    c = tokenize(cand)
    rs = [tokenize(r) for r in refs]
    if not c:
        return 0.0
    n_max = min(4, len(c))
    log_sum = 0.0
    for n in range(1, n_max + 1):
        cand_ng = ngrams(c, n)
        den = len(cand_ng)
        counts = {}
        for g in cand_ng:
            counts[g] = counts.get(g, 0) + 1
        max_ref = {}
        for r in rs:
            rc = {}
            for g in ngrams(r, n):
                rc[g] = rc.get(g, 0) + 1
            for g, k in rc.items():
                max_ref[g] = max(max_ref.get(g, 0), k)
        num = sum(min(k, max_ref.get(g, 0)) for g, k in counts.items())
        p = (num if num > 0 else 1e-9) / den
        log_sum += math.log(p) / n_max
    c_len = len(c)
    r_len = min((abs(len(r) - c_len), len(r)) for r in rs)[1]
    bp = 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)
    return bp * math.exp(log_sum)


# --- ROUGE-L: F1 from LCS.


def lcs(a, b):
    m, n = len(a), len(b)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m):
        for j in range(n):
            dp[i + 1][j + 1] = dp[i][j] + 1 if a[i] == b[j] else max(
                dp[i][j + 1], dp[i + 1][j])
    return dp[m][n]


def rouge_l(cand: str, ref: str) -> float:
    c, r = tokenize(cand), tokenize(ref)
    if not c or not r:
        return 0.0
    l = lcs(c, r)
    if l == 0:
        return 0.0
    p, q = Fraction(l, len(c)), Fraction(l, len(r))
    return float(2 * p * q / (p + q))


# --- simplified METEOR: exact then stem unigram matching, Fmean with
# alpha=0.9, penalty gamma=0.5, beta=3, greedy lowest-index alignment.

SUFFIXES = ["ing", "ly", "es", "ed", "s"]


def stem(t: str) -> str:
    if len(t) > 3:
        for suf in SUFFIXES:
            if t.endswith(suf) and len(t) - len(suf) >= 3:
                return t[:-len(suf)]
    return t


def meteor(cand: str, ref: str) -> float:
    c, r = tokenize(cand), tokenize(ref)
    if not c or not r:
        return 0.0
    match = [-1] * len(c)
    used = [False] * len(r)
    for i, t in enumerate(c):
        for j, u in enumerate(r):
            if not used[j] and t == u:
                match[i] = j
                used[j] = True
                break
    for i, t in enumerate(c):
        if match[i] >= 0:
            continue
        st = stem(t)
        for j, u in enumerate(r):
            if not used[j] and stem(u) == st:
                match[i] = j
                used[j] = True
                break
    pairs = [(i, j) for i, j in enumerate(match) if j >= 0]
    m = len(pairs)
    if m == 0:
        return 0.0
    p, q = m / len(c), m / len(r)
    fmean = p * q / (0.9 * p + 0.1 * q)
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1.0 - penalty)


# --- Distinct-n over a corpus.


def distinct_n(corpus: list[str], n: int) -> float:
    total, uniq = 0, set()
    for s in corpus:
        gs = ngrams(tokenize(s), n)
        total += len(gs)
        uniq.update(gs)
    return len(uniq) / total if total else 0.0


# --- SSIM closed form for two constant images (only the luminance term
# survives: contrast/structure term is exactly 1 when both variances and the
# covariance are zero because of C2).


def ssim_const(mu1: float, mu2: float) -> float:
    c1 = (0.01 * 255) ** 2
    # (2 mu1 mu2 + C1)/(mu1^2 + mu2^2 + C1); the (0+0+C2)/(0+0+C2) factor is 1
    return (2 * mu1 * mu2 + c1) / (mu1 * mu1 + mu2 * mu2 + c1)


def show(label, v):
    print(f"{label:55s} {v!r}")


if __name__ == "__main__":
    print("== bleu4 ==")
    show("identical 5-token", bleu4("the quick brown fox jumps",
                                    ["the quick brown fox jumps"]))
    show("'the cat sat' vs 'the cat sat down'",
         bleu4("the cat sat", ["the cat sat down"]))
    show("'the quick brown fox jumps' vs red-fox ref",
         bleu4("the quick brown fox jumps",
               ["the quick red fox jumps high"]))
    show("multi-ref picks closer length",
         bleu4("a b c d", ["a b c d e f", "a b c d e"]))
    show("zero overlap", bleu4("x y z w", ["a b c d"]))
    show("single token identical", bleu4("hello", ["hello"]))
    show("punctuation/case folding",
         bleu4("The CAT, sat!", ["the cat sat down"]))
    show("repeated token clipping",
         bleu4("the the the the", ["the cat sat down"]))

    print("== rouge_l ==")
    show("'a b c d' vs 'a c d e'", rouge_l("a b c d", "a c d e"))
    show("identical", rouge_l("a b c", "a b c"))
    show("disjoint", rouge_l("a b", "c d"))
    show("'the cat sat on the mat' vs 'the cat lay on the mat'",
         rouge_l("the cat sat on the mat", "the cat lay on the mat"))

    print("== meteor ==")
    show("identical 10-token",
         meteor("a b c d e f g h i j", "a b c d e f g h i j"))
    show("stem-only single token", meteor("jumping", "jumped"))
    show("disjoint", meteor("x y", "a b"))
    show("'the cats jumped high' vs 'the cat jumps higher'",
         meteor("the cats jumped high", "the cat jumps higher"))
    show("reordered bigrams", meteor("c d a b", "a b c d"))

    print("== distinct_n ==")
    show("['a b c'] n=1", distinct_n(["a b c"], 1))
    show("['a a a a'] n=1", distinct_n(["a a a a"], 1))
    show("['a b a b','b a b c'] n=2", distinct_n(["a b a b", "b a b c"], 2))
    show("['a b c d','b c d e'] n=3", distinct_n(["a b c d", "b c d e"], 3))

    print("== ssim constants ==")
    show("constant 100 vs 120", ssim_const(100.0, 120.0))
    show("constant 0 vs 255", ssim_const(0.0, 255.0))
    show("constant 50 vs 50", ssim_const(50.0, 50.0))

    print("== misc vector values ==")
    show("cosine((1,2,2),(2,1,2))", 8.0 / 9.0)
    show("1/sqrt(2)+1 (two-candidate c_int)", 1.0 / math.sqrt(2.0) + 1.0)
