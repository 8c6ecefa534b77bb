"""Regenerates the fixture files in this directory (seeded, deterministic)."""

import json
import random
from pathlib import Path

HERE = Path(__file__).parent
DIM = 100
VGG = 4096

LABELS = [
    "Human with animals",
    "Tennis racket",
    "Baseball",
    "Sportsball",
    "Person snowboarding",
    "Kitchen electronics",
    "Living room",
    "Traffic",
    "Utencils",
    "Person with bags",
    "Animals",
    "Human with Umbrella",
]

ENTITIES = {
    "Human with animals": ["person", "dog", "horse"],
    "Tennis racket": ["person", "tennis racket", "sports ball"],
    "Baseball": ["person", "baseball bat", "baseball glove"],
    "Sportsball": ["sports ball", "person"],
    "Person snowboarding": ["person", "snowboard"],
    "Kitchen electronics": ["microwave", "oven", "refrigerator"],
    "Living room": ["couch", "tv", "chair"],
    "Traffic": ["car", "traffic light", "truck"],
    "Utencils": ["fork", "knife", "spoon"],
    "Person with bags": ["person", "handbag", "backpack"],
    "Animals": ["dog", "cat", "bird"],
    "Human with Umbrella": ["person", "umbrella"],
}

TRIPLES = [
    ("person", "uses", "tennis racket"),
    ("cat", "uses", "bag"),
    ("dog", "uses", "umbrella"),
    ("umbrella", "uses", "person"),
    ("person", "with", "dog"),
    ("dog", "with", "cat"),
    ("cat", "with", "person"),
    ("tennis racket", "with", "bag"),
]


def vec(rng):
    return [round(rng.gauss(0.0, 0.4), 5) for _ in range(DIM)]


def main():
    rng = random.Random(20240601)

    tokens = sorted(
        {t for ents in ENTITIES.values() for e in ents for t in e.split()}
        | {t for h, _, tl in TRIPLES for e in (h, tl) for t in e.split()}
    )
    with open(HERE / "glove_toy.txt", "w") as f:
        for t in tokens:
            f.write(t + " " + " ".join(repr(x) for x in vec(rng)) + "\n")

    (HERE / "labels.txt").write_text("\n".join(LABELS) + "\n")

    with open(HERE / "toy_kb.tsv", "w") as f:
        f.write("# head\trelation\ttail\n")
        for h, r, t in TRIPLES:
            f.write(f"{h}\t{r}\t{t}\n")

    protos = [[max(0.0, rng.gauss(0.0, 1.0)) for _ in range(VGG)] for _ in LABELS]
    with open(HERE / "features.jsonl", "w") as f:
        for i in range(24):
            c = i % len(LABELS)
            ents = list(ENTITIES[LABELS[c]])
            if i == 5:
                ents = ["zebra"]
            if i == 17:
                ents = []
            vgg = [round(max(0.0, p + rng.gauss(0.0, 0.5)), 3) for p in protos[c]]
            rec = {"image_id": f"img{i:03d}", "label": LABELS[c], "entities": ents, "vgg": vgg}
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")

    names = ["person", "dog", "cat", "umbrella", "tennis racket", "handbag"]
    with open(HERE / "detections.jsonl", "w") as f:
        for i in range(6):
            boxes = []
            for _ in range(rng.randint(0, 12) if i else 0):
                x, y = rng.uniform(0, 300), rng.uniform(0, 300)
                w, h = rng.uniform(5, 120), rng.uniform(5, 120)
                boxes.append({
                    "x_min": round(x, 2), "y_min": round(y, 2),
                    "x_max": round(x + w, 2), "y_max": round(y + h, 2),
                    "score": round(rng.uniform(0.1, 1.0), 3),
                    "label": rng.choice(names),
                })
                if rng.random() < 0.5:
                    dx, dy = rng.uniform(-8, 8), rng.uniform(-8, 8)
                    b = dict(boxes[-1])
                    for k, d in (("x_min", dx), ("x_max", dx), ("y_min", dy), ("y_max", dy)):
                        b[k] = round(b[k] + d, 2)
                    b["score"] = round(rng.uniform(0.1, 1.0), 3)
                    boxes.append(b)
            rec = {"image_id": f"img{i:03d}", "boxes": boxes}
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
