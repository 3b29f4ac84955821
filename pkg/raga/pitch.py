"""
Pitch-track and tonic ingestion.

A pitch track is turned into a BinSequence: one entry per frame, holding the
tonic-relative pitch bin on a 120-bin (10 cent) octave-folded grid, or the
UNVOICED sentinel. Unvoiced frames stay in place so that silence separates
phrases downstream.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import PitchFileError, TonicFileError

BINS_PER_OCTAVE = 120
OCTAVES = 6
GRID_BINS = BINS_PER_OCTAVE * OCTAVES  # 720, C2..B6
UNVOICED = -1

# tab or comma (with optional padding), or a run of spaces
_FIELD_SEP = re.compile(r"\s*[\t,]\s*| +")


@dataclass(frozen=True)
class GridConfig:
    ref_freq: float = 65.40639  # C2
    bins_per_octave: int = BINS_PER_OCTAVE
    octaves: int = OCTAVES
    conf_threshold: float = 0.0

    def __post_init__(self):
        if self.bins_per_octave * self.octaves != GRID_BINS:
            raise ValueError("bins_per_octave x octaves must equal 720.")
        if not self.ref_freq > 0:
            raise ValueError("ref_freq must be positive.")
        if not 0.0 <= self.conf_threshold <= 1.0:
            raise ValueError("conf_threshold must lie in [0, 1].")


@dataclass(frozen=True)
class PitchSeries:
    times: np.ndarray
    frequencies: np.ndarray
    # NaN where the file carried no confidence column
    confidences: np.ndarray

    def __len__(self) -> int:
        return int(self.times.shape[0])

    def crop(self, max_seconds: float | None) -> "PitchSeries":
        """Keep frames with time < first_time + max_seconds."""
        if max_seconds is None or len(self) == 0:
            return self
        keep = self.times < self.times[0] + float(max_seconds)
        return PitchSeries(self.times[keep], self.frequencies[keep], self.confidences[keep])


@dataclass(frozen=True)
class BinSequence:
    bins: np.ndarray  # int16, UNVOICED marks unvoiced frames

    @classmethod
    def from_frames(cls, frames) -> "BinSequence":
        """Build from an iterable of bins where None (or UNVOICED) is unvoiced."""
        values = [UNVOICED if f is None else int(f) for f in frames]
        arr = np.asarray(values, dtype=np.int16)
        if np.any((arr != UNVOICED) & ((arr < 0) | (arr >= BINS_PER_OCTAVE))):
            raise ValueError("Voiced bins must lie in [0, 120).")
        return cls(arr)

    def __len__(self) -> int:
        return int(self.bins.shape[0])

    @property
    def voiced(self) -> np.ndarray:
        return self.bins != UNVOICED

    def reversed(self) -> "BinSequence":
        return BinSequence(self.bins[::-1].copy())


def _parse_float(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise PitchFileError(f"non-numeric field {token!r}", line_no) from None
    if not math.isfinite(value):
        raise PitchFileError(f"non-finite field {token!r}", line_no)
    return value


def parse_pitch_file(text: str) -> PitchSeries:
    times: list[float] = []
    freqs: list[float] = []
    confs: list[float] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = _FIELD_SEP.split(line)
        if len(fields) not in (2, 3):
            raise PitchFileError(f"expected 2 or 3 fields, got {len(fields)}", line_no)

        t = _parse_float(fields[0], line_no)
        f = _parse_float(fields[1], line_no)
        if f < 0:
            raise PitchFileError(f"negative frequency {f}", line_no)
        if times and t <= times[-1]:
            raise PitchFileError(f"time {t} does not increase (previous {times[-1]})", line_no)

        c = math.nan
        if len(fields) == 3:
            c = _parse_float(fields[2], line_no)
            if not 0.0 <= c <= 1.0:
                raise PitchFileError(f"confidence {c} outside [0, 1]", line_no)

        times.append(t)
        freqs.append(f)
        confs.append(c)

    return PitchSeries(
        times=np.asarray(times, dtype=np.float64),
        frequencies=np.asarray(freqs, dtype=np.float64),
        confidences=np.asarray(confs, dtype=np.float64),
    )


def parse_tonic_file(text: str) -> float:
    tokens = text.split()
    if not tokens:
        raise TonicFileError("tonic file is empty")
    if len(tokens) > 1:
        raise TonicFileError(f"expected one number, got {len(tokens)} fields")
    try:
        value = float(tokens[0])
    except ValueError:
        raise TonicFileError(f"non-numeric tonic {tokens[0]!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise TonicFileError(f"tonic must be a positive frequency, got {tokens[0]}")
    return value


def load_pitch_file(path) -> PitchSeries:
    return parse_pitch_file(Path(path).read_text(encoding="utf-8"))


def load_tonic_file(path) -> float:
    return parse_tonic_file(Path(path).read_text(encoding="utf-8"))


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def absolute_bins(freqs: np.ndarray, cfg: GridConfig) -> np.ndarray:
    """Absolute grid bins in [0, 720) for strictly positive frequencies."""
    # cents / 10 == bins_per_octave * octaves above ref
    octaves = np.log2(np.asarray(freqs, dtype=np.float64) / cfg.ref_freq)
    idx = _round_half_away(octaves * cfg.bins_per_octave)
    return np.clip(idx, 0, cfg.bins_per_octave * cfg.octaves - 1).astype(np.int64)


def freq_to_bin(f: float, cfg: GridConfig = GridConfig()) -> int:
    """Octave-folded bin of `f`, or UNVOICED for f == 0."""
    if f < 0:
        raise ValueError("frequency must be >= 0")
    if f == 0:
        return UNVOICED
    return int(absolute_bins(np.asarray([f]), cfg)[0] % cfg.bins_per_octave)


def to_bin_sequence(series: PitchSeries, tonic: float, cfg: GridConfig = GridConfig()) -> BinSequence:
    if not tonic > 0:
        raise ValueError(f"tonic must be positive, got {tonic}")
    tonic_bin = freq_to_bin(tonic, cfg)

    freqs = series.frequencies
    voiced = freqs > 0
    if cfg.conf_threshold > 0:
        # absent confidence (NaN) never filters a frame
        voiced &= ~(series.confidences < cfg.conf_threshold)

    out = np.full(freqs.shape[0], UNVOICED, dtype=np.int16)
    if voiced.any():
        folded = absolute_bins(freqs[voiced], cfg) % cfg.bins_per_octave
        out[voiced] = (folded - tonic_bin) % cfg.bins_per_octave
    return BinSequence(out)
