#!/usr/bin/env python3
"""Regenerate fixtures/toy.

Builds a ~100 entity corpus in en/es/fr where PERSON entities get larger
link, category and triple counts, plus a bed / bunk bed pair in which bed's
links, categories and triples are a strict superset of bunk bed's.

Labels are an affine function of each entity's mean normalized feature value
(computed by running the pipeline's ingest+features stages), rounded to 1..5.
Seeds are tried in order until the trained weights are all non-negative.

usage: gen_toy_corpus.py [--bin target/debug/entity-rank] [--start-seed N]
"""

import argparse
import math
import os
import random
import shutil
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "fixtures", "toy")
LANGS = ["en", "es", "fr"]
TYPES = ["PERSON", "LOCATION", "ORGANIZATION", "MISC"]
N = 98  # plus bed and bunk bed

FIRST = ["Ada", "Bruno", "Clara", "Diego", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas",
         "Kira", "Luis", "Mara", "Nils", "Olga", "Pablo", "Rosa", "Sven", "Tara", "Umar"]
LAST = ["Adler", "Berg", "Costa", "Duval", "Engel", "Fonseca", "Gray", "Hahn", "Ito", "Jensen"]
PLACES = ["Avalon", "Brindle", "Corvo", "Dunmore", "Elsby", "Fairholm", "Glenrock", "Harlow",
          "Ivybridge", "Juniper", "Kestrel", "Larkspur", "Marden", "Northam", "Oakhurst"]
ORGS = ["Acme", "Borealis", "Cinder", "Delta", "Ember", "Fulcrum", "Granite", "Helix",
        "Ionic", "Jetstream", "Keystone", "Lumen", "Meridian", "Nimbus", "Orbit"]
THINGS = ["Lamp", "Kettle", "Violin", "Bicycle", "Compass", "Telescope", "Harp", "Anchor",
          "Lantern", "Quill", "Saddle", "Teapot", "Umbrella", "Whistle", "Yacht"]


def title(rng, ty, used):
    for _ in range(1000):
        if ty == "PERSON":
            t = f"{rng.choice(FIRST)} {rng.choice(LAST)}"
        elif ty == "LOCATION":
            t = rng.choice(PLACES) + rng.choice(["", " Bay", " Hill", " Falls", "ton"])
        elif ty == "ORGANIZATION":
            t = rng.choice(ORGS) + rng.choice([" Labs", " Group", " Inc.", " Foundation", " Works"])
        else:
            t = rng.choice(THINGS) + rng.choice(["", " (instrument)", " (object)", " II", " Museum"])
        if t not in used:
            used.add(t)
            return t
    raise RuntimeError("title pool exhausted")


def weighted_sample(rng, items, weights, k):
    items, weights = list(items), list(weights)
    out = []
    for _ in range(min(k, len(items))):
        i = rng.choices(range(len(items)), weights)[0]
        out.append(items.pop(i))
        weights.pop(i)
    return out


def generate(seed):
    rng = random.Random(seed)
    ents = []
    used = set()
    for i in range(N):
        ty = TYPES[i % 4] if i % 9 else ""  # some entities have no declared type
        z = 0.45 + 0.55 * rng.random() if ty == "PERSON" else 0.6 * rng.random()
        langs = ["en"] + [l for l, p in (("es", 0.7), ("fr", 0.6)) if rng.random() < p]
        ents.append({"kb": f"Q{i + 1}", "type": ty, "z": z, "langs": langs,
                     "title": title(rng, ty or "MISC", used)})
    bed = {"kb": "Q99", "type": "MISC", "z": 0.0, "langs": LANGS, "title": "Bed",
           "titles": {"en": "Bed", "es": "Cama", "fr": "Lit"}}
    bunk = {"kb": "Q100", "type": "MISC", "z": 0.0, "langs": LANGS, "title": "Bunk bed",
            "titles": {"en": "Bunk bed", "es": "Litera", "fr": "Lit superposé"}}

    pages, links, cats, triples, scores = [], [], [], [], []
    page_of = {}
    for lang_i, lang in enumerate(LANGS):
        for j, e in enumerate(ents + [bed, bunk]):
            if lang in e["langs"]:
                pid = (lang_i + 1) * 1000 + j + 1
                page_of[(e["kb"], lang)] = pid
                t = e.get("titles", {}).get(lang, e["title"])
                pages.append((e["kb"], lang, pid, t, e["type"]))

    for lang in LANGS:
        members = [e for e in ents if lang in e["langs"]]
        for e in members:
            others = [o for o in members if o is not e]
            k = 1 + round(6 * e["z"] + 2 * rng.random())
            for o in weighted_sample(rng, others, [(0.15 + o["z"]) ** 2 for o in others], k):
                links.append((lang, page_of[(e["kb"], lang)], page_of[(o["kb"], lang)]))
            for c in range(1 + round(5 * e["z"] + rng.random())):
                cats.append((lang, page_of[(e["kb"], lang)], f"Category {rng.randrange(40)}"))
        # bed / bunk bed: bed's neighbourhoods strictly contain bunk bed's
        top = sorted(members, key=lambda o: -o["z"])
        srcs = top[:16]
        dsts = rng.sample(members, 4)
        for who, n_in, n_out, n_cat in ((bed, 16, 4, 4), (bunk, 11, 3, 3)):
            p = page_of[(who["kb"], lang)]
            for s in srcs[:n_in]:
                links.append((lang, page_of[(s["kb"], lang)], p))
            for d in dsts[:n_out]:
                links.append((lang, p, page_of[(d["kb"], lang)]))
            for c in range(n_cat):
                cats.append((lang, p, ["Furniture", "Beds", "Sleep", "Household"][c]))

    typed = {ty: [e for e in ents if e["type"] == ty] for ty in TYPES}
    for e in ents:
        if e["type"]:
            triples.append((e["kb"], "type", f"kb:T_{e['type'].lower()}"))
        others = [o for o in ents if o is not e]
        for o in weighted_sample(rng, others, [(0.15 + o["z"]) ** 2 for o in others],
                                 round(8 * e["z"] + 2 * rng.random())):
            triples.append((e["kb"], rng.choice(["related_to", "member_of", "located_in", "knows"]),
                            f"kb:{o['kb']}"))
        triples.append((e["kb"], "name", e["title"]))
        if rng.random() < 0.3 + 0.4 * e["z"]:
            handle = f"twitter:{e['kb'].lower()}"
            triples.append((e["kb"], "social_profile", handle))
            scores.append((handle, round(100 * min(1.0, e["z"] + 0.1 * rng.random()), 1)))
    triples.append(("Q99", "type", "kb:T_misc"))
    triples.append(("Q100", "type", "kb:T_misc"))
    objs = [typed[t][0] for t in ("PERSON", "LOCATION", "ORGANIZATION", "MISC")]
    subs = [typed["PERSON"][1], typed["LOCATION"][1], typed["PERSON"][2], typed["ORGANIZATION"][1], typed["LOCATION"][2]]
    for who, n_obj, n_sub in ((bed, 4, 5), (bunk, 3, 3)):
        for o in objs[:n_obj]:
            triples.append((who["kb"], "related_to", f"kb:{o['kb']}"))
        for s in subs[:n_sub]:
            triples.append((s["kb"], "uses", f"kb:{who['kb']}"))
    triples.append(("Q99", "social_profile", "twitter:bed"))
    triples.append(("Q100", "social_profile", "twitter:bunkbed"))
    scores += [("twitter:bed", 61.5), ("twitter:bunkbed", 44.0)]

    return {
        "pages.tsv": [p[:4] + ((p[4],) if p[4] else ()) for p in pages],
        "links.tsv": sorted(set(links)),
        "categories.tsv": sorted(set(cats)),
        "triples.tsv": triples,
        "social_scores.tsv": scores,
    }, ents + [bed, bunk]


def write(dirpath, files, comment):
    os.makedirs(dirpath, exist_ok=True)
    for name, rows in files.items():
        with open(os.path.join(dirpath, name), "w", encoding="utf-8") as f:
            f.write(f"# {comment}\n")
            for r in rows:
                f.write("\t".join(str(x) for x in r) + "\n")


def run(binary, conf, out, *stages):
    for s in stages:
        subprocess.run([binary, s, "--config", conf, "--output-dir", out], check=True,
                       stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)


def read_rows(path):
    with open(path, encoding="utf-8") as f:
        return [l.rstrip("\n").split("\t") for l in f if l.strip() and not l.startswith("#")]


CONF = """# toy corpus run
pages = pages.tsv
links = links.tsv
categories = categories.tsv
triples = triples.tsv
labels = labels.tsv
social_scores = social_scores.tsv
seed = 42
top_n = 25
"""


def attempt(binary, seed, dest):
    files, ents = generate(seed)
    with tempfile.TemporaryDirectory() as tmp:
        data = os.path.join(tmp, "data")
        write(data, files, f"toy corpus, generator seed {seed}")
        write(data, {"labels.tsv": []}, "placeholder")
        conf = os.path.join(data, "toy.conf")
        with open(conf, "w") as f:
            f.write(CONF)
        out = os.path.join(tmp, "out")
        run(binary, conf, out, "ingest", "features")
        mean = {}
        for r in read_rows(os.path.join(out, "features", "normalized_matrix.tsv")):
            if r[1] == "en":
                mean[r[0]] = sum(float(v) for v in r[2:]) / (len(r) - 2)
        lo, hi = min(mean.values()), max(mean.values())
        rng = random.Random(seed + 1)
        labels = []
        for kb in sorted(mean, key=lambda k: int(k[1:])):
            y = 1 + 4 * (mean[kb] - lo) / (hi - lo) + rng.gauss(0, 0.25)
            labels.append((kb, min(5, max(1, math.floor(y + 0.5)))))
        files["labels.tsv"] = labels
        write(data, {"labels.tsv": labels}, f"toy corpus, generator seed {seed}")
        run(binary, conf, out, "ingest", "features", "train", "eval", "rank", "report")
        weights = {r[0]: float(r[1]) for r in read_rows(os.path.join(out, "model", "weights.tsv"))}
        neg = [k for k, w in weights.items() if k != "__intercept__" and w < 0]
        if neg:
            return False, f"negative weights {neg}"
        os.makedirs(dest, exist_ok=True)
        for name in list(files) + ["toy.conf"]:
            shutil.copy(os.path.join(data, name), os.path.join(dest, name))
        return True, "ok"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--bin", default=os.path.join(HERE, "..", "..", "..", "target", "debug", "entity-rank"))
    ap.add_argument("--start-seed", type=int, default=1)
    ap.add_argument("--tries", type=int, default=500)
    args = ap.parse_args()
    for seed in range(args.start_seed, args.start_seed + args.tries):
        ok, why = attempt(args.bin, seed, OUT)
        print(f"seed {seed}: {why}", file=sys.stderr)
        if ok:
            return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
