"""Independent derivation of expected.csv from the three fixture files.

Every metric is recomputed here from its definition: non-projectivity by
scanning each arc's span for non-descendants, depths by walking heads.
Run: python3 oracle.py > expected.csv
"""
import os

HERE = os.path.dirname(os.path.abspath(__file__))

HEADER = """\
# twinparse error profile
# tokens=all (punctuation included)
# ratios=fractions in [0,1]; numerator and denominator are token counts
# empty_bins=omitted
# dep_length=bins root,1..9,>=10; gold arcs binned by gold head, predicted arcs by predicted head
# root_distance=arcs from the root-attached token (that token is 0), bins 0..9,>=10; gold arcs in the gold tree, predicted arcs in the predicted tree
# nonproj=precision over predicted non-projective arcs, recall over gold non-projective arcs
# deprel=precision keyed by predicted relation, recall keyed by gold relation
# upos=labeled attachment accuracy keyed by gold UPOS
# sentence_length=token-level LAS pooled per bin 1-10,11-20,21-30,31-40,41-50,50+
system,treebank,metric,bin,value,numerator,denominator
"""


def read(name):
    sents, cur, tb = [], [], None
    for line in open(os.path.join(HERE, name)):
        line = line.rstrip("\n")
        if not line:
            if cur:
                sents.append((tb, cur))
            cur, tb = [], None
        elif line.startswith("#"):
            k, _, v = line[1:].partition("=")
            if k.strip() == "treebank":
                tb = v.strip()
        else:
            c = line.split("\t")
            cur.append((c[1], c[3], int(c[6]), c[7]))
    if cur:
        sents.append((tb, cur))
    return sents


def ancestors(heads, d):
    out = set()
    while d != 0:
        d = heads[d - 1]
        out.add(d)
    return out


def nonproj(heads):
    arcs = []
    for d in range(1, len(heads) + 1):
        h = heads[d - 1]
        lo, hi = min(h, d), max(h, d)
        if any(h not in ancestors(heads, k) for k in range(lo + 1, hi)):
            arcs.append(d)
    return arcs


def depth(heads, d):
    # ROOT is not counted: the root-attached token has depth 0
    return len(ancestors(heads, d)) - 1


def length_bin(h, d):
    if h == 0:
        return (0, "root")
    n = abs(h - d)
    return (2, ">=10") if n >= 10 else (1, n)


def dist_bin(k):
    return (1, ">=10") if k >= 10 else (0, k)


def sent_bin(n):
    if n > 50:
        return (60, "50+")
    hi = -(-n // 10) * 10
    return (hi, "%d-%d" % (hi - 9, hi))


class R:
    def __init__(self):
        self.n = self.d = 0

    def add(self, ok):
        self.d += 1
        self.n += int(ok)

    def v(self):
        return self.n / self.d if self.d else None


def pr(table, key, which, ok):
    table.setdefault(key, {"p": R(), "r": R()})[which].add(ok)


def profile(system, tb, pairs, out):
    las, uas = R(), R()
    dl, rd, up, dr, sl = {}, {}, {}, {}, {}
    npr = {"p": R(), "r": R()}
    for g, p in pairs:
        gh = [t[2] for t in g]
        ph = [t[2] for t in p]
        n = len(g)
        for d in range(1, n + 1):
            head_ok = gh[d - 1] == ph[d - 1]
            ok = head_ok and g[d - 1][3] == p[d - 1][3]
            uas.add(head_ok)
            las.add(ok)
            pr(dl, length_bin(gh[d - 1], d), "r", ok)
            pr(dl, length_bin(ph[d - 1], d), "p", ok)
            pr(rd, dist_bin(depth(gh, d)), "r", ok)
            pr(rd, dist_bin(depth(ph, d)), "p", ok)
            up.setdefault(g[d - 1][1], R()).add(ok)
            pr(dr, g[d - 1][3], "r", ok)
            pr(dr, p[d - 1][3], "p", ok)
            sl.setdefault(sent_bin(n), R()).add(ok)
        for d in nonproj(ph):
            npr["p"].add(gh[d - 1] == ph[d - 1] and g[d - 1][3] == p[d - 1][3])
        for d in nonproj(gh):
            npr["r"].add(gh[d - 1] == ph[d - 1] and g[d - 1][3] == p[d - 1][3])

    def row(metric, b, r):
        if r.v() is not None:
            out.append("%s,%s,%s,%s,%.4f,%d,%d" % (system, tb, metric, b, r.v(), r.n, r.d))

    def rows(metric, b, s, with_f):
        row(metric + "_precision", b, s["p"])
        row(metric + "_recall", b, s["r"])
        p, r = s["p"].v(), s["r"].v()
        if with_f and p is not None and r is not None:
            f = 0.0 if p + r == 0 else 2.0 * p * r / (p + r)
            out.append("%s,%s,%s_f,%s,%.4f,," % (system, tb, metric, b, f))

    row("las", "all", las)
    row("uas", "all", uas)
    for k in sorted(dl):
        rows("dep_length", k[1], dl[k], True)
    for k in sorted(rd):
        rows("root_distance", k[1], rd[k], True)
    rows("nonproj", "all", npr, False)
    for k in sorted(up, key=lambda s: s.encode()):
        row("upos_las", k, up[k])
    for k in sorted(dr, key=lambda s: s.encode()):
        rows("deprel", k, dr[k], False)
    for k in sorted(sl):
        row("sentence_length_las", k[1], sl[k])


def main():
    gold = read("gold.conllu")
    out = []
    for system in ["transition", "graph"]:
        pred = read(system + ".conllu")
        pairs = [(g[1], p[1]) for g, p in zip(gold, pred)]
        profile(system, "all", pairs, out)
        for tb in sorted({g[0] for g in gold}):
            profile(system, tb, [(g[1], p[1]) for g, p in zip(gold, pred) if g[0] == tb], out)
    print(HEADER + "\n".join(out))


main()
