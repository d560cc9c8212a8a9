#!/usr/bin/env python3
"""Builds demo ground-truth boxes and sliding-window proposals for the demo reports.

Each annotated phrase is tied to one anatomy label; its box is the bounding box
of that label's projected mask in a finished `paxray project` run.

    python3 tools/make_demo_annotations.py run data/annotations.json data/proposals.json
"""

import argparse
import json
import os

# (report id, phrase as it appears in the findings, label whose box is the answer)
TARGETS = [
    ("r1", "Small right pleural effusion", "right_lobe_lower"),
    ("r2", "Left lower lobe opacity", "left_lobe_lower"),
    ("r2", "Fracture of the left 6th rib posterior", "left_6th_rib_posterior"),
    ("r3", "Cardiomegaly", "heart"),
    ("r3", "Tortuous descending aorta", "descending_aorta"),
    ("r3", "calcification of the aortic arch", "aortic_arch"),
    ("r4", "Elevated right hemidiaphragm", "hemidiaphragm_right"),
    ("r4", "Degenerative changes of the thoracic spine", "thoracic_spine"),
    ("r5", "Right upper lobe nodule", "right_lobe_upper"),
    ("r5", "Mild enlargement of the heart", "heart"),
    ("r6", "Opacity in the left lung", "left_lung"),
]

WINDOWS = (16, 32)


def load_mask(stem):
    with open(stem + ".json", encoding="utf-8") as f:
        header = json.load(f)
    h, w = header["shape"]
    with open(stem + ".raw", "rb") as f:
        data = f.read()
    return h, w, data


def bbox(h, w, data):
    rows = [r for r in range(h) if any(data[r * w:(r + 1) * w])]
    cols = [c for c in range(w) if any(data[r * w + c] for r in range(h))]
    if not rows:
        return None
    return [cols[0], rows[0], cols[-1] + 1, rows[-1] + 1]


def sliding_windows(h, w):
    boxes = [{"box": [0, 0, w, h], "score": 1.0}]
    for size in WINDOWS:
        step = size // 2
        for y in range(0, max(1, h - size + 1), step):
            for x in range(0, max(1, w - size + 1), step):
                boxes.append({"box": [x, y, min(w, x + size), min(h, y + size)], "score": round(size / max(h, w), 6)})
    return boxes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir")
    ap.add_argument("annotations")
    ap.add_argument("proposals")
    args = ap.parse_args()

    annotations, proposals = [], {}
    for view in ("frontal", "lateral"):
        labels = os.path.join(args.run_dir, "projection", view, "labels")
        for report, phrase, label in TARGETS:
            h, w, data = load_mask(os.path.join(labels, label))
            box = bbox(h, w, data)
            if box is None:
                continue
            annotations.append({"report_id": report, "view": view, "phrase": phrase, "box": box, "image_size": [w, h]})
            proposals.setdefault(f"{report}/{view}", sliding_windows(h, w))

    for path, obj in ((args.annotations, annotations), (args.proposals, proposals)):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(obj, f, indent=2, sort_keys=True)
            f.write("\n")


if __name__ == "__main__":
    main()
