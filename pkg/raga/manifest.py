from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .exceptions import ManifestError

MANIFEST_HEADER = ("id", "pitch_path", "tonic_path", "label", "tradition")
TRADITIONS = ("Hindustani", "Carnatic")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    pitch_path: Path
    tonic_path: Path
    label: str
    tradition: str

    def __str__(self) -> str:
        return f"{self.id} ({self.label})"


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries)

    @property
    def labels(self) -> tuple[str, ...]:
        """Label vocabulary in sorted order; index = label index."""
        return tuple(sorted({e.label for e in self.entries}))

    def label_counts(self) -> Counter:
        return Counter(e.label for e in self.entries)

    def sorted_by_id(self) -> "DatasetManifest":
        return DatasetManifest(tuple(sorted(self.entries, key=lambda e: e.id)))


def _canonical_tradition(value: str, line_no: int) -> str:
    for t in TRADITIONS:
        if value.strip().lower() == t.lower():
            return t
    raise ManifestError(f"line {line_no}: unknown tradition {value!r} (expected Hindustani or Carnatic)")


def parse_manifest(text: str, base_dir: Path | str = ".") -> DatasetManifest:
    base_dir = Path(base_dir)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ManifestError("manifest is empty") from None
    if tuple(h.strip() for h in header) != MANIFEST_HEADER:
        raise ManifestError(f"manifest header must be {','.join(MANIFEST_HEADER)}")

    entries = []
    seen = set()
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(MANIFEST_HEADER):
            raise ManifestError(f"line {line_no}: expected {len(MANIFEST_HEADER)} columns, got {len(row)}")
        rec_id, pitch, tonic, label, tradition = (c.strip() for c in row)
        if not rec_id:
            raise ManifestError(f"line {line_no}: empty recording id")
        if rec_id in seen:
            raise ManifestError(f"line {line_no}: duplicate recording id {rec_id!r}")
        if not label:
            raise ManifestError(f"line {line_no}: empty label for {rec_id!r}")
        seen.add(rec_id)
        entries.append(
            ManifestEntry(
                id=rec_id,
                pitch_path=base_dir / pitch,
                tonic_path=base_dir / tonic,
                label=label,
                tradition=_canonical_tradition(tradition, line_no),
            )
        )
    if not entries:
        raise ManifestError("manifest has no recordings")
    return DatasetManifest(tuple(entries))


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    return parse_manifest(text, base_dir=path.parent)


def manifest_csv(manifest: DatasetManifest, relative_to: Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in manifest:
        pitch, tonic = e.pitch_path, e.tonic_path
        if relative_to is not None:
            pitch = pitch.relative_to(relative_to)
            tonic = tonic.relative_to(relative_to)
        writer.writerow([e.id, pitch.as_posix(), tonic.as_posix(), e.label, e.tradition])
    return buf.getvalue()
