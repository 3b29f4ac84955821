"""
Sequential Pitch Distribution (SPD) features.

For a start note p_s, an end note p_e and a direction, a cell collects the
pitch histogram of every stretch of frames that starts within r bins of p_s,
ends within r bins of p_e, and only visits bins on the circular arc between
them (ascending for POSITIVE, descending for NEGATIVE). 12 x 12 x 2 cells of
120 bins make the tensor u; cells without any stretch fall back to the plain
pitch distribution of the recording.

`enumerate_pairs` + `cell_histogram` is the literal (quadratic) definition and
serves as the oracle; `fast_cell_histogram` produces identical counts in one
linear pass per cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .pitch import BINS_PER_OCTAVE, BinSequence

NOTES = tuple(range(0, BINS_PER_OCTAVE, 10))
N_NOTES = len(NOTES)
MAX_RELAXATION = 4  # r >= 5 makes the start and end windows overlap
SPD_SHAPE = (N_NOTES, N_NOTES, 2, BINS_PER_OCTAVE)


class Direction(IntEnum):
    POSITIVE = 0
    NEGATIVE = 1


@dataclass(frozen=True)
class CellKey:
    p_s: int
    p_e: int
    direction: Direction

    def __post_init__(self):
        for p in (self.p_s, self.p_e):
            if p not in NOTES:
                raise ValueError(f"cell endpoints must be multiples of 10 in [0, 110], got {p}")

    @property
    def index(self) -> tuple[int, int, int]:
        return self.p_s // 10, self.p_e // 10, int(self.direction)

    @property
    def is_transition(self) -> bool:
        return self.p_s != self.p_e


def transition_cells() -> list[CellKey]:
    """The 264 off-diagonal cells in (p_s, p_e, direction) order."""
    return [
        CellKey(p_s, p_e, d)
        for p_s in NOTES
        for p_e in NOTES
        for d in Direction
        if p_s != p_e
    ]


def check_relaxation(r: int) -> int:
    if isinstance(r, bool) or int(r) != r or not 0 <= r <= MAX_RELAXATION:
        raise ValueError(f"relaxation r must be an integer in [0, {MAX_RELAXATION}], got {r!r}")
    return int(r)


def _arc_bins(key: CellKey, r: int) -> np.ndarray:
    if key.direction is Direction.POSITIVE:
        first = key.p_s - r
        length = ((key.p_e + r) - first) % BINS_PER_OCTAVE + 1
        return (first + np.arange(length)) % BINS_PER_OCTAVE
    first = key.p_s + r
    length = (first - (key.p_e - r)) % BINS_PER_OCTAVE + 1
    return (first - np.arange(length)) % BINS_PER_OCTAVE


def _mask(bins: np.ndarray) -> np.ndarray:
    # one extra False slot so that UNVOICED (-1) looks up as "not a member"
    out = np.zeros(BINS_PER_OCTAVE + 1, dtype=bool)
    out[bins] = True
    return out


def _window_bins(center: int, r: int) -> np.ndarray:
    return (center + np.arange(-r, r + 1)) % BINS_PER_OCTAVE


def arc_set(key: CellKey, r: int) -> frozenset[int]:
    r = check_relaxation(r)
    return frozenset(int(b) for b in _arc_bins(key, r))


def enumerate_pairs(seq: BinSequence, key: CellKey, r: int) -> list[tuple[int, int]]:
    """Every (i_s, i_e), i_s < i_e, satisfying the three transition conditions."""
    r = check_relaxation(r)
    bins = seq.bins
    in_arc = _mask(_arc_bins(key, r))[bins].tolist()
    is_start = _mask(_window_bins(key.p_s, r))[bins]
    is_end = _mask(_window_bins(key.p_e, r))[bins].tolist()

    n = len(bins)
    pairs = []
    for i_s in np.flatnonzero(is_start).tolist():
        for i_e in range(i_s + 1, n):
            if is_end[i_e]:
                pairs.append((i_s, i_e))
            # the end window lies inside the arc, so a frame off the arc ends the scan
            if not in_arc[i_e]:
                break
    return pairs


def cell_histogram(seq: BinSequence, pairs) -> np.ndarray:
    counts = np.zeros(BINS_PER_OCTAVE, dtype=np.int64)
    if not pairs:
        return counts
    n = len(seq)
    span = np.asarray(pairs, dtype=np.int64)
    # frame multiplicity = number of [i_s, i_e] spans covering it
    cover = np.zeros(n + 1, dtype=np.int64)
    np.add.at(cover, span[:, 0], 1)
    np.add.at(cover, span[:, 1] + 1, -1)
    multiplicity = np.cumsum(cover[:n])

    voiced = seq.voiced & (multiplicity > 0)
    np.add.at(counts, seq.bins[voiced], multiplicity[voiced])
    return counts


class _CellCounter:
    """Per-sequence cumulative window counts shared by all cells of one r."""

    def __init__(self, seq: BinSequence, r: int):
        self.r = check_relaxation(r)
        self.bins = seq.bins
        self.n = len(seq)
        self.idx = np.arange(self.n)
        self._starts: dict[int, np.ndarray] = {}
        self._ends: dict[int, np.ndarray] = {}

    def _starts_before(self, note: int) -> np.ndarray:
        # cs[i] = start-window frames in [0, i)
        if note not in self._starts:
            hits = _mask(_window_bins(note, self.r))[self.bins]
            self._starts[note] = np.concatenate(([0], np.cumsum(hits, dtype=np.int64)))
        return self._starts[note]

    def _ends_from(self, note: int) -> np.ndarray:
        # ce[i] = end-window frames in [i, n)
        if note not in self._ends:
            hits = _mask(_window_bins(note, self.r))[self.bins]
            self._ends[note] = np.concatenate((np.cumsum(hits[::-1], dtype=np.int64)[::-1], [0]))
        return self._ends[note]

    def counts(self, key: CellKey) -> np.ndarray:
        counts = np.zeros(BINS_PER_OCTAVE, dtype=np.int64)
        if self.n == 0:
            return counts
        idx = self.idx
        in_arc = _mask(_arc_bins(key, self.r))[self.bins]
        breaks = ~in_arc

        last_break = np.maximum.accumulate(np.where(breaks, idx, -1))
        next_break = np.minimum.accumulate(np.where(breaks, idx, self.n)[::-1])[::-1]

        cs = self._starts_before(key.p_s)
        ce = self._ends_from(key.p_e)
        starts_upto = cs[idx + 1] - cs[last_break + 1]
        ends_from = ce[idx] - ce[next_break]

        # start and end windows are disjoint for r <= 4, so i_s < i_e holds
        contrib = starts_upto * ends_from
        hit = in_arc & (contrib > 0)
        np.add.at(counts, self.bins[hit], contrib[hit])
        return counts


def fast_cell_histogram(seq: BinSequence, key: CellKey, r: int) -> np.ndarray:
    return _CellCounter(seq, r).counts(key)


def pitch_distribution(seq: BinSequence) -> np.ndarray:
    voiced = seq.bins[seq.voiced]
    if voiced.size == 0:
        return np.full(BINS_PER_OCTAVE, 1.0 / BINS_PER_OCTAVE)
    hist = np.bincount(voiced, minlength=BINS_PER_OCTAVE).astype(np.float64)
    return hist / hist.sum()


@dataclass(frozen=True)
class SpdTensor:
    u: np.ndarray  # (12, 12, 2, 120)
    pd: np.ndarray  # (120,)
    fallback_mask: np.ndarray  # (12, 12, 2) bool
    relaxation: int

    def slice(self, key: CellKey) -> np.ndarray:
        return self.u[key.index]


def build_spd(seq: BinSequence, r: int) -> SpdTensor:
    r = check_relaxation(r)
    pd = pitch_distribution(seq)
    u = np.empty(SPD_SHAPE, dtype=np.float64)
    u[...] = pd
    fallback = np.ones(SPD_SHAPE[:3], dtype=bool)

    counter = _CellCounter(seq, r)
    for key in transition_cells():
        counts = counter.counts(key)
        total = counts.sum()
        if total == 0:
            continue
        u[key.index] = counts / total
        fallback[key.index] = False
    return SpdTensor(u=u, pd=pd, fallback_mask=fallback, relaxation=r)


def split_v1(u: np.ndarray) -> np.ndarray:
    """(11, 12, 2, 120): v1[j - 1][i] = u[i][(i + j) % 12] for j = 1..11."""
    i = np.arange(N_NOTES)
    return np.stack([u[i, (i + j) % N_NOTES] for j in range(1, N_NOTES)])


def split_v2(u: np.ndarray) -> np.ndarray:
    """(12, 11, 2, 120): v2[i][d - 1] = u[i][(i + d) % 12] for d = 1..11."""
    d = np.arange(1, N_NOTES)
    return np.stack([u[i, (i + d) % N_NOTES] for i in range(N_NOTES)])


FEATURE_NAMES = tuple(
    [f"v1_{j}" for j in range(1, N_NOTES)]
    + [f"v2_{i}" for i in range(N_NOTES)]
    + ["u", "pd"]
)


@dataclass(frozen=True)
class FeatureSet:
    names: tuple[str, ...]
    raw: tuple[np.ndarray, ...]
    # each feature scaled to total mass 1, the input to every distance
    normalized: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.normalized[self.index(name)]


def _renormalize(feature: np.ndarray) -> np.ndarray:
    slices = feature.size // BINS_PER_OCTAVE
    return feature / slices


def assemble_feature_set(u: np.ndarray, pd: np.ndarray) -> FeatureSet:
    v1 = split_v1(u)
    v2 = split_v2(u)
    raw = [v1[j] for j in range(v1.shape[0])] + [v2[i] for i in range(v2.shape[0])] + [u, pd]
    return FeatureSet(
        names=FEATURE_NAMES,
        raw=tuple(raw),
        normalized=tuple(_renormalize(f) for f in raw),
    )


def extract_features(spd: SpdTensor) -> FeatureSet:
    return assemble_feature_set(spd.u, spd.pd)
