"""Class registry, manifest CSV handling and count/speaker bookkeeping for the football keyword set."""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

SPLITS = ("train", "test", "css")


@dataclass(frozen=True)
class KeywordClass:
    index: int
    name: str
    ipa: str
    dirname: str


_KEYWORDS = [
    # name, IPA, train, test, css
    ("Corner", "/korner/", 1322, 300, 22),
    ("Foul", "/xatâ/", 1369, 300, 3),
    ("Free kick", "/kâʃteh/", 1506, 300, 80),
    ("Goal", "/gol/", 1370, 300, 53),
    ("Goalposts", "/tirak/", 1376, 300, 91),
    ("Hand", "/hand/", 1588, 300, 53),
    ("Laying off", "/exrâj/", 1354, 300, 72),
    ("Mulct", "/jarimeh/", 1533, 300, 12),
    ("Notice", "/extâr/", 1311, 300, 39),
    ("Offside", "/âfsajd/", 1268, 300, 56),
    ("Out", "/ot/", 1323, 300, 56),
    ("Penalty", "/penâlti/", 1375, 300, 91),
    ("Red card", "/kârte qermez/", 1219, 300, 30),
    ("Strike", "/zarbeh/", 1358, 300, 93),
    ("Substitute", "/ta?viz/", 1298, 300, 81),
    ("Tackle", "/takl/", 1245, 300, 34),
    ("Throw-in", "/partâb/", 1331, 300, 73),
    ("Yellow card", "/kârte zard/", 1289, 300, 23),
]
_RESERVED = [("Silence", "", 0, 300, 20), ("Unknown", "", 0, 300, 20)]


def _dirname(name: str) -> str:
    return name.lower().replace(" ", "_").replace("-", "_")


CLASSES: tuple[KeywordClass, ...] = tuple(
    KeywordClass(i, name, ipa, _dirname(name)) for i, (name, ipa, *_c) in enumerate(_KEYWORDS + _RESERVED))
N_KEYWORDS = len(_KEYWORDS)
SILENCE, UNKNOWN = N_KEYWORDS, N_KEYWORDS + 1

# Reference per-class counts by split, as published with the dataset.
REFERENCE_COUNTS: dict[str, dict[str, int]] = {
    split: {name: counts[j] for name, _ipa, *counts in _KEYWORDS + _RESERVED}
    for j, split in enumerate(SPLITS)
}
REFERENCE_TOTALS = {"train": 24435, "test": 6000, "css": 1002}

_BY_KEY = {}
for _c in CLASSES:
    _BY_KEY[_c.name.lower()] = _c
    _BY_KEY[_c.dirname] = _c


def class_names() -> list[str]:
    return [c.name for c in CLASSES]


def lookup_class(key) -> KeywordClass:
    """Find a class by index, display name or ASCII directory name (case-insensitive)."""
    if isinstance(key, int):
        if 0 <= key < len(CLASSES):
            return CLASSES[key]
        raise KeyError(f"class index {key} outside 0..{len(CLASSES) - 1}")
    try:
        return _BY_KEY[str(key).strip().lower()]
    except KeyError:
        raise KeyError(f"unknown class {key!r}") from None


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    path: str
    label: int
    split: str
    speaker: str | None = None


@dataclass(frozen=True)
class Manifest:
    rows: tuple[ManifestRow, ...]
    has_speakers: bool = False

    def __len__(self) -> int:
        return len(self.rows)

    def by_split(self, split: str) -> list[ManifestRow]:
        return [r for r in self.rows if r.split == split]


def parse_manifest(text: str, source: str = "<manifest>") -> Manifest:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ManifestError(f"{source}: empty manifest (missing header)") from None
    if header[:3] != ["path", "class", "split"] or len(header) > 4 or (len(header) == 4 and header[3] != "speaker"):
        raise ManifestError(f"{source}: header must be path,class,split[,speaker], got {','.join(header)}")
    has_speakers = len(header) == 4
    rows, seen = [], {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != len(header):
            raise ManifestError(f"{source}:{lineno}: expected {len(header)} fields, got {len(rec)}")
        path, cls, split = (f.strip() for f in rec[:3])
        try:
            label = lookup_class(cls).index
        except KeyError:
            raise ManifestError(f"{source}:{lineno}: unknown class {cls!r}") from None
        if split not in SPLITS:
            raise ManifestError(f"{source}:{lineno}: split {split!r} not one of {', '.join(SPLITS)}")
        if not path:
            raise ManifestError(f"{source}:{lineno}: empty path")
        if path in seen:
            raise ManifestError(f"{source}:{lineno}: duplicate path {path!r} (first on line {seen[path]})")
        seen[path] = lineno
        speaker = (rec[3].strip() or None) if has_speakers else None
        rows.append(ManifestRow(path, label, split, speaker))
    return Manifest(tuple(rows), has_speakers)


def load_manifest(path, root=None, check_files: bool = False) -> Manifest:
    """Parse and validate a manifest CSV; optionally require every audio path to exist under ``root``."""
    path = Path(path)
    m = parse_manifest(path.read_text(encoding="utf-8"), str(path))
    if check_files:
        base = Path(root) if root is not None else path.parent
        missing = [r.path for r in m.rows if not (base / r.path).is_file()]
        if missing:
            raise ManifestError(f"{path}: {len(missing)} listed files missing, e.g. {missing[0]}")
    return m


def format_manifest(m: Manifest) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path", "class", "split"] + (["speaker"] if m.has_speakers else []))
    for r in m.rows:
        row = [r.path, CLASSES[r.label].name, r.split]
        if m.has_speakers:
            row.append(r.speaker or "")
        w.writerow(row)
    return buf.getvalue()


def save_manifest(m: Manifest, path) -> None:
    Path(path).write_text(format_manifest(m), encoding="utf-8")


def reference_manifest(with_speakers: bool = False) -> Manifest:
    """A manifest with exactly the reference per-class split counts (paths are placeholders)."""
    rows = []
    for split in SPLITS:
        for c in CLASSES:
            for i in range(REFERENCE_COUNTS[split][c.name]):
                spk = f"{split}-{c.dirname}-{i % 50}" if with_speakers else None
                rows.append(ManifestRow(f"{split}/{c.dirname}/{i:05d}.wav", c.index, split, spk))
    return Manifest(tuple(rows), with_speakers)


def validate_counts(m: Manifest) -> dict:
    """Per-class, per-split counts against the reference table. Report only; never raises."""
    counts = Counter((r.split, r.label) for r in m.rows)
    report = {"splits": {}, "all_zero_deltas": True}
    for split in SPLITS:
        per_class = {}
        for c in CLASSES:
            n = counts.get((split, c.index), 0)
            ref = REFERENCE_COUNTS[split][c.name]
            per_class[c.name] = {"count": n, "reference": ref, "delta": n - ref}
            report["all_zero_deltas"] &= n == ref
        total = sum(v["count"] for v in per_class.values())
        report["splits"][split] = {
            "total": total, "reference_total": REFERENCE_TOTALS[split],
            "delta": total - REFERENCE_TOTALS[split], "classes": per_class,
        }
    return report


def speaker_disjointness(m: Manifest) -> dict:
    """Per class: how many test samples come from speakers never seen in train."""
    if not m.has_speakers or any(r.speaker is None for r in m.rows if r.split in ("train", "test")):
        return {"evaluable": False, "reason": "speaker ids not available"}
    train_speakers = {r.speaker for r in m.rows if r.split == "train"}
    per_class = defaultdict(lambda: {"test": 0, "unseen_speaker": 0, "overlapping": 0})
    for r in m.by_split("test"):
        entry = per_class[CLASSES[r.label].name]
        entry["test"] += 1
        if r.speaker in train_speakers:
            entry["overlapping"] += 1
        else:
            entry["unseen_speaker"] += 1
    return {"evaluable": True, "classes": {c.name: dict(per_class[c.name]) for c in CLASSES
                                           if c.name in per_class}}
