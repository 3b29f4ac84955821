"""Shared fixtures: random bin sequences and small corpora written to temp dirs."""
from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

import numpy as np

from raga.config import RunConfig
from raga.manifest import MANIFEST_HEADER
from raga.pitch import UNVOICED, BinSequence
from raga.synth import bins_to_frequencies, pitch_file_text, tonic_frequency


def random_sequence(rng, max_len: int = 500, unvoiced: float = 0.1) -> BinSequence:
    n = int(rng.integers(1, max_len + 1))
    bins = rng.integers(0, 120, size=n).astype(np.int16)
    bins[rng.random(n) < unvoiced] = UNVOICED
    return BinSequence(bins)


def held_notes(notes, dwell: int = 20) -> BinSequence:
    return BinSequence(np.repeat(np.asarray(notes, dtype=np.int16), dwell))


class TempDirMixin:
    def make_tempdir(self) -> Path:
        path = Path(tempfile.mkdtemp(prefix="raga-test-"))
        self.addCleanup(shutil.rmtree, path, ignore_errors=True)
        return path


def write_recording(root: Path, rec_id: str, seq: BinSequence, tonic_bin: int = 200, hop: float = 0.01):
    pitch = root / "pitch" / f"{rec_id}.tsv"
    tonic = root / "tonic" / f"{rec_id}.tonic"
    pitch.parent.mkdir(parents=True, exist_ok=True)
    tonic.parent.mkdir(parents=True, exist_ok=True)
    pitch.write_text(pitch_file_text(bins_to_frequencies(seq, tonic_bin), hop), encoding="utf-8")
    tonic.write_text(f"{tonic_frequency(tonic_bin):.6f}\n", encoding="utf-8")
    return pitch, tonic


def write_corpus_files(root: Path, recordings, tradition: str = "Hindustani") -> Path:
    """recordings: iterable of (id, label, BinSequence). Returns the manifest path."""
    lines = [",".join(MANIFEST_HEADER)]
    for rec_id, label, seq in recordings:
        pitch, tonic = write_recording(root, rec_id, seq)
        lines.append(f"{rec_id},{pitch.relative_to(root).as_posix()},{tonic.relative_to(root).as_posix()},{label},{tradition}")
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def run_config(root: Path, **changes) -> RunConfig:
    return RunConfig(cache_dir=root / "cache", **changes)
