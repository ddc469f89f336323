#!/usr/bin/env python3
"""Writes the mining/evaluation fixtures and their expected outputs.

The expected files are computed here from first principles (template
grouping, lexical entailment, pair enumeration, metric definitions), not by
the C++ code under test. Rerun after editing the corpus below:

    python3 tests/fixtures/make_fixtures.py
"""

import itertools
import json
import math
import os
from collections import Counter, OrderedDict

HERE = os.path.dirname(os.path.abspath(__file__))

STOP = set("""
i me my myself we our ours ourselves you you're you've you'll you'd your yours
yourself yourselves he him his himself she she's her hers herself it it's its
itself they them their theirs themselves what which who whom this that that'll
these those am is are was were be been being have has had having do does did
doing a an the and but if or because as until while of at by for with about
against between into through during before after above below to from up down
in out on off over under again further then once here there when where why how
all any both each few more most other some such no nor not only own same so
than too very s t can will just don don't should should've now d ll m o re ve
y ain aren aren't couldn couldn't didn didn't doesn doesn't hadn hadn't hasn
hasn't haven haven't isn isn't ma mightn mightn't mustn mustn't needn needn't
shan shan't shouldn shouldn't wasn wasn't weren weren't won won't wouldn
wouldn't""".split())


def is_stop(tok):
    t = tok.lower()
    return t in STOP or all(not c.isalnum() for c in t)


# (id, gold, text) with the head in [[...]] and the tail in {{...}}; types
# follow the closing bracket as :TYPE.
SENTENCES = [
    # "works for"; every one also says "is employed by".
    ("fx-01", "works_for", "[[alice]]:PERSON works for {{acme}}:ORG , where she is employed by contract ."),
    ("fx-02", "works_for", "[[bruno]]:PERSON works for {{globex corp}}:ORG and is employed by its research arm ."),
    ("fx-03", "works_for", "today [[chen wei]]:PERSON works for {{initech}}:ORG ; he is employed by the legal team there ."),
    ("fx-04", "works_for", "[[dana]]:PERSON works for {{hooli}}:ORG as an analyst who is employed by the hour ."),
    ("fx-05", "member_of", "[[elif]]:PERSON works for {{umbrella}}:ORG , the union that is employed by nobody ."),
    ("fx-06", "works_for", "[[farid]]:PERSON works for {{vandelay}}:ORG since he is employed by its import desk ."),
    # "is employed by"; every one also says "works for".
    ("fx-07", "works_for", "[[greta]]:PERSON is employed by {{acme}}:ORG and works for its cloud unit ."),
    ("fx-08", "works_for", "[[hiro tanaka]]:PERSON is employed by {{initech}}:ORG , where he works for the ceo ."),
    ("fx-09", "works_for", "[[ines]]:PERSON is employed by {{stark labs}}:ORG but mostly works for clients ."),
    ("fx-10", "works_for", "[[jonas]]:PERSON is employed by {{hooli}}:ORG and works for two managers ."),
    ("fx-11", "works_for", "records say [[kofi mensah]]:PERSON is employed by {{wayne group}}:ORG and works for its board ."),
    # "founded"
    ("fx-12", "founded", "[[lena]]:PERSON founded {{tyrell}}:ORG in a garage ."),
    ("fx-13", "founded", "[[marta]]:PERSON founded {{cyberdyne}}:ORG after college ."),
    ("fx-14", "founded", "yesterday [[nadia]]:PERSON founded {{soylent}}:ORG with friends ."),
    ("fx-15", "founded", "[[omar]]:PERSON founded {{oscorp}}:ORG ."),
    ("fx-16", "founded", "[[priya shah]]:PERSON founded {{monarch}}:ORG in lagos ."),
    # "was born in"
    ("fx-17", "born_in", "[[quentin]]:PERSON was born in {{paris}}:LOC ."),
    ("fx-18", "born_in", "[[rosa]]:PERSON was born in {{osaka}}:LOC in spring ."),
    ("fx-19", "born_in", "[[sven]]:PERSON was born in {{new york}}:LOC ."),
    ("fx-20", "born_in", "[[tara]]:PERSON was born in {{lima}}:LOC to a large family ."),
    ("fx-21", "born_in", "notably [[umar]]:PERSON was born in {{cairo}}:LOC ."),
    # "is headquartered in"
    ("fx-22", "headquartered_in", "[[acme]]:ORG is headquartered in {{oslo}}:LOC ."),
    ("fx-23", "headquartered_in", "[[initech]]:ORG is headquartered in {{dublin}}:LOC , close to the river ."),
    ("fx-24", "headquartered_in", "[[hooli]]:ORG is headquartered in {{perth}}:LOC ."),
    ("fx-25", "headquartered_in", "[[nakatomi]]:ORG is headquartered in {{buenos aires}}:LOC ."),
    ("fx-26", "headquartered_in", "the firm [[aperture]]:ORG is headquartered in {{riga}}:LOC ."),
    # One relation, six surface forms; only the rewrites align them.
    ("fx-27", "visited", "[[vera novak]]:PERSON toured {{hanoi}}:LOC last year ."),
    ("fx-28", "visited", "[[wes]]:PERSON went to {{accra}}:LOC for a week ."),
    ("fx-29", "visited", "[[ximena]]:PERSON stopped in {{quito}}:LOC on the way home ."),
    ("fx-30", "visited", "[[yusuf]]:PERSON traveled to {{kathmandu}}:LOC ."),
    ("fx-31", "visited", "[[zoe]]:PERSON flew to {{lagos}}:LOC ."),
    ("fx-32", "visited", "[[ana lima]]:PERSON spent a weekend in {{oslo}}:LOC ."),
    # Singletons and sentences without a usable predicate.
    ("fx-33", "visited", "{{paris}}:LOC welcomed [[boris]]:PERSON warmly ."),
    ("fx-34", "knows", "[[carla ruiz]]:PERSON and {{dev}}:PERSON met at initech ."),
    ("fx-35", "acquired", "[[wonka]]:ORG acquired {{duff}}:ORG in 2001 ."),
    ("fx-36", "acquired", "[[gringotts]]:ORG bought {{krusty co}}:ORG last spring ."),
    ("fx-37", "competitor_of", "[[massive dynamic]]:ORG , a rival of {{umbrella}}:ORG , grew fast ."),
    ("fx-38", "lives_in", "[[alice]]:PERSON lives in {{paris}}:LOC ."),
    ("fx-39", "headquartered_in", "[[acme]]:ORG {{oslo}}:LOC office opened ."),
    ("fx-40", "advises", "reportedly [[dana]]:PERSON once advised {{hooli}}:ORG ."),
]

VISITED = ["fx-27", "fx-28", "fx-29", "fx-30", "fx-31", "fx-32"]


def parse(sid, gold, text):
    # Entity words may span several pieces.
    out, spans, i = [], {}, 0
    words = text.split(" ")
    while i < len(words):
        w = words[i]
        for open_, close, role in (("[[", "]]", "head"), ("{{", "}}", "tail")):
            if w.startswith(open_):
                j = i
                while close not in words[j]:
                    j += 1
                ent = " ".join(words[i:j + 1])
                body, typ = ent[len(open_):].split(close + ":")
                start = len(out)
                out.extend(body.split(" "))
                spans[role] = {"start": start, "end": len(out) - 1, "type": typ}
                i = j + 1
                break
        else:
            out.append(w)
            i += 1
    return OrderedDict(id=sid, tokens=out, head=spans["head"], tail=spans["tail"],
                       gold_relation=gold)


def surface(s, role):
    return s["tokens"][s[role]["start"]:s[role]["end"] + 1]


def builtin_predicate(s):
    h, t = s["head"], s["tail"]
    first, second = (t, h) if t["start"] < h["start"] else (h, t)
    gap = [w.lower() for w in s["tokens"][first["end"] + 1:second["start"]]]
    if not gap or len(gap) > 8 or all(is_stop(w) for w in gap):
        return None
    return " ".join(gap)


def premise(s):
    out = []
    for i, w in enumerate(s["tokens"]):
        if s["head"]["start"] <= i <= s["head"]["end"]:
            if i == s["head"]["start"]:
                out.append("[h]")
        elif s["tail"]["start"] <= i <= s["tail"]["end"]:
            if i == s["tail"]["start"]:
                out.append("[t]")
        else:
            out.append(w)
    return " ".join(out)


def stub_entails(prem, hypo):
    needle = [w for w in hypo.lower().split() if w not in ("[h]", "[t]")]
    it = iter(prem.lower().split())
    return bool(needle) and all(any(w == p for p in it) for w in needle)


def groups_of(sentences, t):
    keyed = {}
    for s in sentences:
        key = builtin_predicate(s)
        if key is not None:
            keyed.setdefault(key, []).append(s["id"])
    return {k: v for k, v in sorted(keyed.items()) if len(v) > t}


def mutual(groups, by_id, r):
    keys = sorted(groups)

    def entails(a, b):
        prem = [premise(by_id[i]) for i in groups[a]]
        hits = sum(stub_entails(p, "[h] " + b + " [t]") for p in prem)
        return hits >= r * len(prem) - 1e-9

    return [(a, b) for a, b in itertools.combinations(keys, 2)
            if entails(a, b) and entails(b, a)]


def det(sid):
    return {"id": sid, "variant": "deterministic"}


def pair(a, b, source):
    return {"anchor": det(a), "partner": det(b), "source": source}


def compact(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def pretty(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write(name, text):
    path = os.path.join(HERE, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(text)


def jsonl(rows):
    return "".join(compact(r) + "\n" for r in rows)


def count(pairs, by_id):
    return {"total": len(pairs),
            "correct": sum(by_id[p["anchor"]["id"]]["gold_relation"]
                           == by_id[p["partner"]["id"]]["gold_relation"] for p in pairs)}


def pct(part, whole):
    return "0.0%" if whole == 0 else "%.1f%%" % (100.0 * part / whole)


def render_stats(st):
    rows = []

    def row(label, a, b):
        rows.append(label.ljust(34) + a.ljust(14) + b)

    def absent(v, fmt):
        return "absent" if v is None else fmt(v)

    rows.append("Relation templates")
    row("", "Original", "Rewritten")
    row("# templates", str(st["templates"]), absent(st["rewritten_templates"], str))
    row("avg # sentences per template", "%.2f" % st["sentences_per_template"],
        absent(st["rewritten_sentences_per_template"], lambda v: "%.2f" % v))
    row("# sentences covered", "%d/%d" % (st["covered_sentences"], st["sentences"]),
        pct(st["covered_sentences"], st["sentences"]))
    rows.append("")
    rows.append("Mined pairs")
    row("", "Total", "Correct")
    for label, key in (("# same-template pairs", "same_template_pairs"),
                       ("# mutually entailed pairs", "entailed_pairs"),
                       ("# rewrite-derived pairs", "rewrite_derived_pairs")):
        c = st[key]
        if c is None:
            row(label, "absent", "absent")
        else:
            row(label, str(c["total"]),
                "%d (%s)" % (c["correct"], pct(c["correct"], c["total"])))
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# Metrics by direct enumeration.


def b3(pred, gold):
    n = len(pred)
    p = r = 0.0
    for i in range(n):
        same_pred = [j for j in range(n) if pred[j] == pred[i]]
        same_gold = [j for j in range(n) if gold[j] == gold[i]]
        both = [j for j in same_pred if gold[j] == gold[i]]
        p += len(both) / len(same_pred)
        r += len(both) / len(same_gold)
    return p / n, r / n


def entropy(labels):
    n = len(labels)
    return -sum(c / n * math.log(c / n) for c in Counter(labels).values())


def cond_entropy(a, b):
    # H(a | b)
    n = len(a)
    joint = Counter(zip(a, b))
    marg = Counter(b)
    return -sum(c / n * math.log(c / marg[y]) for (x, y), c in joint.items())


def hm(a, b):
    return 0.0 if a + b == 0 else 2 * a * b / (a + b)


def ari(pred, gold):
    n = len(pred)
    pairs = list(itertools.combinations(range(n), 2))
    a = sum(pred[i] == pred[j] and gold[i] == gold[j] for i, j in pairs)
    sp = sum(pred[i] == pred[j] for i, j in pairs)
    sg = sum(gold[i] == gold[j] for i, j in pairs)
    expected = sp * sg / len(pairs)
    top = (sp + sg) / 2
    if top == expected:
        return 1.0 if sp == sg == a else 0.0
    return (a - expected) / (top - expected)


def report(pred, gold):
    p, r = b3(pred, gold)
    hg = entropy(gold)
    hp = entropy(pred)
    h = 1.0 if hg == 0 else 1 - cond_entropy(gold, pred) / hg
    c = 1.0 if hp == 0 else 1 - cond_entropy(pred, gold) / hp
    full = {"b3_precision": p, "b3_recall": r, "b3_f1": hm(p, r), "homogeneity": h,
            "completeness": c, "v_f1": hm(h, c), "ari": ari(pred, gold)}
    out = {k: math.floor(v * 1000.0 + 0.5) / 10.0 if v >= 0
           else -math.floor(-v * 1000.0 + 0.5) / 10.0 for k, v in full.items()}
    out["full_precision"] = full
    return out


# ---------------------------------------------------------------------------


def main():
    corpus = [parse(*row) for row in SENTENCES]
    by_id = {s["id"]: s for s in corpus}
    assert len(corpus) == 40
    write("corpus40.jsonl", jsonl(corpus))

    t, r = 4, 0.95
    groups = groups_of(corpus, t)
    same = [pair(ids[i], ids[j], "same_template")
            for key, ids in groups.items()
            for i, j in itertools.combinations(range(len(ids)), 2)]
    entailed = [pair(x, y, "entailed_template")
                for a, b in mutual(groups, by_id, r)
                for x in groups[a] for y in groups[b]]
    write("expected/pairs_cross_no_rewrites.jsonl", jsonl(same + entailed))

    # Queries the grouping step issues, with offline scores that agree with
    # the lexical stub.
    queries, seen = [], set()
    for tp1, ids in groups.items():
        for tp2 in groups:
            if tp1 == tp2:
                continue
            hypo = "[h] " + tp2 + " [t]"
            for sid in ids:
                q = (premise(by_id[sid]), hypo)
                if q not in seen:
                    seen.add(q)
                    queries.append(q)
    write("expected/nli_queries.jsonl",
          jsonl({"premise": p, "hypothesis": h} for p, h in queries))
    scores = []
    for p, h in queries:
        if stub_entails(p, h):
            probs = (0.9, 0.07, 0.03)
        else:
            probs = (0.05, 0.9, 0.05)
        scores.append({"premise": p, "hypothesis": h, "p_entail": probs[0],
                       "p_neutral": probs[1], "p_contra": probs[2]})
    write("nli_scores.jsonl", jsonl(scores))

    # Rewrites: the six "visited" sentences in one canonical phrase, plus a
    # record whose tail span runs past the end.
    rewrites = []
    for sid in VISITED:
        s = by_id[sid]
        head, tail = surface(s, "head"), surface(s, "tail")
        toks = head + ["visited"] + tail
        rewrites.append(OrderedDict(
            id=sid, tokens=toks,
            head={"start": 0, "end": len(head) - 1, "type": s["head"]["type"]},
            tail={"start": len(head) + 1, "end": len(toks) - 1, "type": s["tail"]["type"]},
            gold_relation=None))
    rewrites.append(OrderedDict(
        id="fx-33", tokens=["boris", "visited", "paris"],
        head={"start": 0, "end": 0, "type": "PERSON"},
        tail={"start": 2, "end": 3, "type": "LOC"}, gold_relation=None))
    write("rewrites.jsonl", jsonl(rewrites))

    rw_groups = groups_of([OrderedDict(id=x["id"], tokens=x["tokens"], head=x["head"],
                                       tail=x["tail"]) for x in rewrites[:-1]], t)
    assert list(rw_groups) == ["visited"]
    rw_candidates = [pair(ids[i], ids[j], "rewrite_derived")
                     for ids in rw_groups.values()
                     for i, j in itertools.combinations(range(len(ids)), 2)]
    keep = math.floor(0.10 * len(rw_candidates) + 0.5)
    write("expected/rewrite_candidates.jsonl", jsonl(rw_candidates))

    covered = sum(len(v) for v in groups.values())
    stats = {
        "sentences": len(corpus),
        "templates": len(groups),
        "sentences_per_template": covered / len(groups),
        "covered_sentences": covered,
        "coverage": covered / len(corpus),
        "rewritten_templates": len(rw_groups),
        "rewritten_sentences_per_template":
            sum(len(v) for v in rw_groups.values()) / len(rw_groups),
        "same_template_pairs": count(same, by_id),
        "entailed_pairs": count(entailed, by_id),
        # Every candidate joins two "visited" sentences, so all kept ones are
        # correct whichever the sampler picks.
        "rewrite_derived_pairs": {"total": keep, "correct": keep},
    }
    write("expected/mining_stats.json", pretty(stats))
    write("expected/mining_stats.txt", render_stats(stats))
    no_rw = dict(stats, rewritten_templates=None, rewritten_sentences_per_template=None,
                 rewrite_derived_pairs=None)
    write("expected/mining_stats_no_rewrites.json", pretty(no_rw))
    write("expected/mining_stats_no_rewrites.txt", render_stats(no_rw))

    # External triples: ten lines, eight usable.
    triples = []
    for sid in ["fx-01", "fx-07", "fx-12", "fx-17", "fx-22", "fx-27", "fx-35", "fx-38"]:
        s = by_id[sid]
        gap = s["tokens"][s["head"]["end"] + 1:s["tail"]["start"]]
        triples.append({"id": sid, "subject": surface(s, "head"), "predicate": gap,
                        "object": surface(s, "tail")})
    triples.insert(3, {"id": "fx-02", "subject": ["bruno", "x"], "predicate": ["works", "for"],
                       "object": ["globex", "corp"]})
    triples.append({"id": "fx-99", "subject": ["nobody"], "predicate": ["knows"],
                    "object": ["nothing"]})
    write("triples10.jsonl", jsonl(triples))

    # Predicted clusters for the evaluation fixture: grouped by gold relation,
    # with a few deliberate mistakes.
    relations = sorted({s["gold_relation"] for s in corpus})
    pred_ids = {rel: i for i, rel in enumerate(relations)}
    pred = []
    for s in corpus:
        label = pred_ids[s["gold_relation"]]
        if s["id"] in ("fx-07", "fx-08"):
            label = pred_ids["founded"]
        if s["id"] in ("fx-33", "fx-38"):
            label = pred_ids["born_in"]
        if s["gold_relation"] in ("knows", "advises"):
            label = pred_ids["works_for"]
        pred.append(label)
    write("eval_labels.jsonl", jsonl({"id": s["id"], "label": p} for s, p in zip(corpus, pred)))
    write("expected/eval_report_oracle.json",
          pretty(report(pred, [s["gold_relation"] for s in corpus])))

    # Five sentences with externally computed encodings (dim 3), one row per
    # token of the marker-tagged sequence.
    mini = corpus[11:13] + corpus[16:19]
    write("mini5.jsonl", jsonl(mini))
    lines = [compact({"dim": 3})]
    for n, s in enumerate(mini):
        rows = len(s["tokens"]) + 4
        base = 1.0 if s["gold_relation"] == "founded" else -1.0
        vecs = [[round(base, 3), round(0.1 * ((k + n) % 5), 3), round(0.05 * k, 3)]
                for k in range(rows)]
        lines.append(compact({"id": s["id"], "vectors": vecs}))
    write("mini5_encodings.jsonl", "\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
