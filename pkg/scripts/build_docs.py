"""Regenerate the synthetic source documents under src/reviewgraph/data/docs.

Each document is seeded filler prose with the answer tables of its cases
embedded under keyword captions. Tables are nudged so none straddles a
segment boundary of the default retrieval configuration.
"""
from __future__ import annotations

import json
import random
import re
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from reviewgraph.rag import RagConfig, segment_text  # noqa: E402

DATA = ROOT / "src" / "reviewgraph" / "data"
TARGET_CHARS = 90_000

VOCAB = """
sample substrate chamber pulse purge cycle film surface growth reactor flow pressure
window uniformity wafer nucleation interface density roughness layer precursor dose
exposure saturation kinetics thermal stability crystallinity anneal spectroscopy
ellipsometry microscopy diffraction stoichiometry impurity carbon hydrogen oxygen
nitrogen ligand fragment desorption adsorption coverage steric hindrance conformal
trench pore particle fluidized bed spatial rotary batch showerhead inlet exhaust
valve manifold carrier gas argon heating ramp setpoint calibration quartz balance
mass gain thickness refractive index optical band gap dielectric leakage current
breakdown field capacitance mobility carrier trap state passivation barrier diffusion
""".split()
GLUE = "the of and in with for on at by from was were is are this that these".split()


def sentence(rng: random.Random) -> str:
    words = [rng.choice(VOCAB if rng.random() < 0.7 else GLUE) for _ in range(rng.randint(8, 18))]
    return " ".join(words).capitalize() + "."


def paragraph(rng: random.Random) -> str:
    text = " ".join(sentence(rng) for _ in range(rng.randint(3, 7)))
    lines, line = [], ""
    for w in text.split():
        if len(line) + len(w) + 1 > 96:
            lines.append(line)
            line = w
        else:
            line = f"{line} {w}" if line else w
    lines.append(line)
    return "\n".join(lines)


def caption(k: int, nl: str) -> str:
    seen = []
    for w in re.findall(r"[A-Za-z0-9/°%+-]+", nl.lower()):
        if len(w) > 3 and w not in seen:
            seen.append(w)
    return f"Table {k}. Overview ({', '.join(seen)})."


def filler(rng: random.Random, chars: int) -> list[str]:
    out, n = [], 0
    while n < chars:
        p = paragraph(rng)
        out.append(p)
        n += len(p) + 2
    return out


def straddles(doc: str, start: int, end: int, cfg: RagConfig) -> int | None:
    """Return the cut position inside [start, end) if a segment boundary falls there."""
    for seg in segment_text(doc, cfg):
        cut = seg.char_span[1]
        if start < cut < end:
            return cut
    return None


def build(doc_id: str, cases: list[dict], cfg: RagConfig) -> str:
    rng = random.Random(doc_id)
    blocks = filler(rng, TARGET_CHARS)
    tables = []
    for k, case in enumerate(cases, 1):
        gold = (DATA / case["gold_table"]).read_text(encoding="utf-8").strip()
        tables.append(caption(k, case["detailed_nl_query"]) + "\n" + gold)
    # spread tables evenly through the filler
    step = max(1, len(blocks) // (len(tables) + 1))
    for k, table in reversed(list(enumerate(tables, 1))):
        blocks.insert(k * step, table)
    # push a table into the next segment when a boundary would cut it
    for _ in range(200):
        doc = "\n\n".join(blocks)
        moved = False
        for table in tables:
            start = doc.index(table)
            cut = straddles(doc, start, start + len(table), cfg)
            if cut is not None:
                i = blocks.index(table)
                blocks.insert(i, "\n".join(paragraph(rng) for _ in range(3)))
                moved = True
                break
        if not moved:
            return doc + "\n"
    raise RuntimeError(f"could not place tables in {doc_id}")


def main() -> None:
    manifest = json.loads((DATA / "manifest.json").read_text(encoding="utf-8"))
    by_doc: dict[str, list[dict]] = {}
    for case in manifest["cases"]:
        for d in case["doc_ids"]:
            by_doc.setdefault(d, []).append(case)
    out = DATA / manifest["docs"]
    out.mkdir(exist_ok=True)
    cfg = RagConfig()
    for doc_id, cases in sorted(by_doc.items()):
        text = build(doc_id, cases, cfg)
        (out / f"{doc_id}.txt").write_text(text, encoding="utf-8")
        print(f"{doc_id}: {len(text)} chars, {len(segment_text(text, cfg))} segments, {len(cases)} tables")


if __name__ == "__main__":
    main()
