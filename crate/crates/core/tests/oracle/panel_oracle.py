#!/usr/bin/env python3
"""Independent reference evaluation of the 22-metric panel for a dump.

Usage: panel_oracle.py <fixture dir> <data dir> > golden_panel.jsonl

Reads posts.jsonl, comments.jsonl and the optional information.json /
mentoring.json classifier files from the fixture directory and the lexicon
files from the data directory. Toxicity uses the offline fallback lexicon.
Written for ASCII fixture text.
"""
import json
import math
import re
import sys
from pathlib import Path

METRICS = [
    "information_sharing", "links", "educational_links", "gratitude", "politeness",
    "accommodation", "community_score", "supportiveness", "subsequent_comments",
    "direct_replies", "depth", "sustained_partners", "sustained_turns", "compliments",
    "laughter", "personal_disclosure", "donations", "mentoring", "pct_nontoxic_untuned",
    "pct_nontoxic_tuned", "toxic_untuned", "toxic_tuned",
]

LAUGH = re.compile(
    r"\ba*h+a+h+a+(h+a+)*?h*\b|\bl+o+l+(o+l+)*?\b|\bh+e+h+e+(h+e+)*?h*\b", re.IGNORECASE
)
URL = re.compile(r"\bhttps?://[^\s<>\[\]()]+", re.IGNORECASE)
URL_TRAIL = ".,!?;:'\")]*_’"
WORD = re.compile(r"[A-Za-z0-9']+")

GRATITUDE = [
    "thank you", "thankful for", "grateful for", "greatful for", "my gratitude", "i appreciate",
    "make me smile", "i super appreciate", "i deeply appreciate", "i really appreciate",
    "bless your soul", "thanks", "contented", "blessed",
]
FIRST_PERSON = {"i", "me", "my", "mine", "myself"}


def lines(path):
    out = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        s = raw.strip()
        if s and not s.startswith("#"):
            out.append(raw.rstrip("\n"))
    return out


def term_values(path):
    out = []
    for l in lines(path):
        term, value = l.split("\t")
        out.append((term.strip().lower(), float(value)))
    return out


def tokenize(text):
    """(tokens, spans, urls); spans index into the url-blanked text."""
    urls = []
    clean = list(text)
    for m in URL.finditer(text):
        u = m.group(0).rstrip(URL_TRAIL)
        if "://" not in u or not u.split("://", 1)[1]:
            continue
        urls.append(u)
        for i in range(m.start(), m.start() + len(u)):
            clean[i] = " "
    clean = "".join(clean)
    toks, spans = [], []
    for m in WORD.finditer(clean):
        w = m.group(0)
        inner = w.strip("'")
        if not inner:
            continue
        start = m.start() + (len(w) - len(w.lstrip("'")))
        toks.append(inner.lower())
        spans.append((start, start + len(inner)))
    return toks, spans, clean, urls


def phrase_matches(text, phrases):
    """Indices of matched phrases, leftmost-longest, non-overlapping, phrase
    tokens separated by whitespace only."""
    toks, spans, clean, _ = tokenize(text)
    plist = [(tokenize(p)[0], i) for i, p in enumerate(phrases)]
    plist.sort(key=lambda x: -len(x[0]))
    hits = []
    i = 0
    while i < len(toks):
        found = None
        for ptoks, idx in plist:
            n = len(ptoks)
            if n == 0 or i + n > len(toks) or toks[i:i + n] != ptoks:
                continue
            if all(clean[spans[i + k][1]:spans[i + k + 1][0]].strip() == "" for k in range(n - 1)):
                found = (idx, n)
                break
        if found:
            hits.append(found[0])
            i += found[1]
        else:
            i += 1
    return hits


class Lexicons:
    def __init__(self, data):
        d = Path(data)
        self.valence = dict(term_values(d / "sentiment_valence.tsv"))
        self.boosters = dict(term_values(d / "sentiment_boosters.tsv"))
        self.negators = {w.strip().lower().replace("'", "") for w in lines(d / "negators.txt")}
        self.politeness = term_values(d / "politeness.tsv")
        self.supportiveness = term_values(d / "supportiveness.tsv")
        self.toxicity = term_values(d / "toxicity_fallback.tsv")
        self.educational = {norm_domain(x) for x in lines(d / "educational_domains.txt")}
        self.donation = {norm_domain(x) for x in lines(d / "donation_domains.txt")}
        cats = {}
        for l in lines(d / "markers.tsv"):
            c, w = l.split("\t")
            cats.setdefault(c.strip(), set()).add(w.strip().lower())
        self.markers = list(cats.values())


def norm_domain(d):
    d = d.strip().rstrip(".").lower()
    return d[4:] if d.startswith("www.") else d


def host_of(url):
    rest = url.split("://", 1)[1]
    auth = re.split(r"[/?#]", rest)[0]
    host = auth.rsplit("@", 1)[-1]
    if ":" in host:
        h, port = host.rsplit(":", 1)
        if port.isdigit():
            host = h
    host = norm_domain(host)
    labels = host.split(".")
    if not host or "." not in host or any(not l or not re.fullmatch(r"[A-Za-z0-9-]+", l) for l in labels):
        return None
    return host


def in_list(host, domains):
    parts = host.split(".")
    return any(".".join(parts[i:]) in domains for i in range(len(parts)))


def lexicon_score(text, lexicon, signed):
    terms = [t for t, _ in lexicon]
    h = sum(lexicon[i][1] for i in phrase_matches(text, terms))
    if signed:
        return h / (abs(h) + 1.0)
    h = max(h, 0.0)
    return h / (h + 1.0)


def compound(words, lex):
    """Valence sum with boosters (damped 1, .95, .9) and negation (x -0.74)
    over lowercase words, normalized by x / sqrt(x^2 + 15)."""
    total = 0.0
    damp = [1.0, 0.95, 0.9]
    for i, w in enumerate(words):
        if w in lex.boosters or w not in lex.valence:
            continue
        v = lex.valence[w]
        for back in range(3):
            j = i - back - 1
            if j < 0:
                break
            prev = words[j]
            if prev in lex.valence:
                continue
            if prev in lex.boosters:
                s = lex.boosters[prev]
                v += (-s if v < 0 else s) * damp[back]
            if prev.endswith("n't") or prev.replace("'", "") in lex.negators:
                v *= -0.74
        total += v
    if total == 0:
        return 0.0
    return max(-1.0, min(1.0, total / math.sqrt(total * total + 15.0)))


def compliments(text, lex):
    toks, spans, clean, _ = tokenize(text)
    space = lambda i: clean[spans[i][1]:spans[i + 1][0]].strip() == ""
    n, i, count = len(toks), 0, 0
    while i < n:
        end = None
        if toks[i] == "you" and i + 1 < n and toks[i + 1] in ("is", "are") and space(i):
            end = i + 2
        elif toks[i] == "your" and i + 2 < n and toks[i + 2] in ("is", "are") and space(i) and space(i + 1):
            end = i + 3
        if end is None:
            i += 1
            continue
        if not (i > 0 and toks[i - 1] in ("if", "when")):
            if compound(toks[end:end + 5], lex) >= 0.7:
                count += 1
        i = end
    return count


def classifier(path):
    if not path.exists():
        return None
    m = json.loads(path.read_text())
    weights, bias, thr = m["weights"], m["bias"], m["decision_threshold"]

    def positive(text):
        toks = tokenize(text)[0]
        grams = toks + [a + " " + b for a, b in zip(toks, toks[1:])]
        z = bias + sum(weights.get(g, 0.0) for g in grams)
        return 1.0 / (1.0 + math.exp(-z)) >= thr

    return positive


def deleted_author(a):
    return a == "" or a == "[deleted]"


def is_gone(body):
    return body.strip() in ("[deleted]", "[removed]")


def panel(tlc, replies, lex, info, mentor):
    kids = {}
    for r in replies:
        kids.setdefault(r["parent_id"], []).append(r)
    by_id = {c["id"]: c for c in [tlc] + replies}
    parent = {r["id"]: r["parent_id"] for r in replies}

    n = len(replies)
    v = {}
    informative = links = edu = don = grat = comp = laugh = disc = ment = 0
    pol, sup, tox = [], [], []
    for r in replies:
        body = r["body"]
        urls = tokenize(body)[3]
        e = d = 0
        for u in urls:
            h = host_of(u)
            if h and in_list(h, lex.educational):
                e += 1
            elif h and in_list(h, lex.donation):
                d += 1
        links += len(urls)
        edu += e
        don += d
        if (info and info(body)) or e > 0:
            informative += 1
        if mentor and mentor(body):
            ment += 1
        grat += len(phrase_matches(body, GRATITUDE))
        pol.append(lexicon_score(body, lex.politeness, True))
        sup.append(lexicon_score(body, lex.supportiveness, True))
        comp += compliments(body, lex)
        laugh += len(list(LAUGH.finditer(body)))
        if any(t.split("'")[0] in FIRST_PERSON for t in tokenize(body)[0]):
            disc += 1
        tox.append(lexicon_score(body, lex.toxicity, False))

    v["information_sharing"] = informative
    v["links"] = links
    v["educational_links"] = edu
    v["donations"] = don
    v["gratitude"] = grat
    v["politeness"] = sum(pol) / n if n else None
    v["supportiveness"] = sum(sup) / n if n else None
    v["compliments"] = comp
    v["laughter"] = laugh
    v["personal_disclosure"] = disc
    v["mentoring"] = ment
    v["community_score"] = sum(r["score"] for r in replies)
    v["subsequent_comments"] = n
    v["direct_replies"] = len(kids.get(tlc["id"], []))

    def depth(cid):
        return max([1 + depth(k["id"]) for k in kids.get(cid, [])], default=0)

    v["depth"] = depth(tlc["id"])

    pairs = set()
    best = 0

    def ok(a, b):
        return not deleted_author(a["author"]) and not deleted_author(b["author"]) and a["author"] != b["author"]

    # longest chain u1, u2, u1, u2, ... of reply edges between two authors
    def chain_from(cid):
        c = by_id[cid]
        out = 1
        for k in kids.get(cid, []):
            if ok(c, k):
                out = max(out, 1 + alt(k["id"], c["author"]))
        return out

    def alt(cid, other):
        c = by_id[cid]
        out = 1
        for k in kids.get(cid, []):
            if ok(c, k) and k["author"] == other:
                out = max(out, 1 + alt(k["id"], c["author"]))
        return out

    for r in replies:
        p = by_id[parent[r["id"]]]
        if ok(p, r):
            pairs.add(tuple(sorted((p["author"], r["author"]))))
    for cid in by_id:
        c = chain_from(cid)
        if c >= 2:
            best = max(best, c)
    v["sustained_partners"] = len(pairs)
    v["sustained_turns"] = best

    # accommodation toward the tlc author
    target = tlc["author"]
    exchanges = []
    for c in [tlc] + replies:
        mine = c is tlc or (not deleted_author(target) and c["author"] == target)
        if not mine or is_gone(c["body"]):
            continue
        for k in kids.get(c["id"], []):
            if is_gone(k["body"]) or k["author"] == target:
                continue
            exchanges.append((set(tokenize(c["body"])[0]), set(tokenize(k["body"])[0])))
    if not exchanges:
        v["accommodation"] = None
    else:
        scores = []
        for words in lex.markers:
            obs = [(bool(p & words), bool(q & words)) for p, q in exchanges]
            trig = [o for o in obs if o[0]]
            if not trig:
                continue
            scores.append(sum(1 for o in trig if o[1]) / len(trig) - sum(1 for o in obs if o[1]) / len(obs))
        v["accommodation"] = sum(scores) / len(scores) if scores else None

    un = sum(1 for t in tox if t > 0.5)
    tu = sum(1 for t in tox if t > 0.8)
    v["toxic_untuned"] = un
    v["toxic_tuned"] = tu
    v["pct_nontoxic_untuned"] = 1.0 - un / n if n else 1.0
    v["pct_nontoxic_tuned"] = 1.0 - tu / n if n else 1.0
    return v


def strip(i):
    return i[3:] if re.match(r"t\d_", i) else i


def main():
    fixture, data = Path(sys.argv[1]), Path(sys.argv[2])
    lex = Lexicons(data)
    info = classifier(fixture / "information.json")
    mentor = classifier(fixture / "mentoring.json")
    comments = [json.loads(l) for l in (fixture / "comments.jsonl").read_text().splitlines() if l.strip()]
    for c in comments:
        c["parent_id"] = strip(c["parent_id"])
        c["link_id"] = strip(c["link_id"])
    tlcs = [c for c in comments if c["parent_id"] == c["link_id"]]
    kids = {}
    for c in comments:
        kids.setdefault(c["parent_id"], []).append(c)
    for t in sorted(tlcs, key=lambda c: c["id"]):
        replies, stack = [], [t["id"]]
        while stack:
            for k in kids.get(stack.pop(), []):
                replies.append(k)
                stack.append(k["id"])
        v = panel(t, replies, lex, info, mentor)
        print(json.dumps({"id": t["id"], "values": {m: v[m] for m in METRICS}}))


if __name__ == "__main__":
    main()
