"""
Synthetic melodic corpora with known labels.

A RagaGrammar walks its ascent map for one phrase, then its descent map for
the next, holding every note for a jittered number of frames and adding
rounded Gaussian noise in bins. The corpus writer renders the sequences to
pitch/tonic files on the analysis grid plus a manifest.
"""
from __future__ import annotations

import dataclasses
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DataError, GrammarError
from .features import NOTES
from .manifest import DatasetManifest, ManifestEntry, manifest_csv
from .pitch import BINS_PER_OCTAVE, UNVOICED, BinSequence, GridConfig
from .storage import atomic_write_text, parse_key_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RagaGrammar:
    name: str
    scale: tuple[int, ...]
    ascent: dict
    descent: dict
    dwell_mean: int = 20
    dwell_jitter: int = 0
    cent_noise_sd: float = 0.0
    phrase_len: int = 8

    def __post_init__(self):
        if not self.name or not re.fullmatch(r"[\w.-]+", self.name):
            raise GrammarError(f"grammar name {self.name!r} must be a plain identifier")
        scale = tuple(sorted(set(int(b) for b in self.scale)))
        if not scale or any(b not in NOTES for b in scale):
            raise GrammarError(f"{self.name}: scale bins must be multiples of 10 in [0, 110]")
        object.__setattr__(self, "scale", scale)
        for label, mapping in (("ascent", self.ascent), ("descent", self.descent)):
            if not mapping:
                raise GrammarError(f"{self.name}: {label} map is empty")
            outside = [b for pair in mapping.items() for b in pair if b not in scale]
            if outside:
                raise GrammarError(f"{self.name}: {label} map leaves the scale at {sorted(set(outside))}")
        if self.dwell_mean < 1:
            raise GrammarError(f"{self.name}: dwell mean must be >= 1")
        if self.dwell_jitter < 0 or self.phrase_len < 1 or self.cent_noise_sd < 0:
            raise GrammarError(f"{self.name}: jitter, phrase length and noise must be non-negative")


def generate(grammar: RagaGrammar, n_frames: int, seed) -> BinSequence:
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    rng = np.random.default_rng(seed)

    notes: list[int] = []
    dwells: list[int] = []
    total = 0
    note = grammar.scale[0]
    ascending = True
    while total < n_frames:
        mapping = grammar.ascent if ascending else grammar.descent
        for _ in range(grammar.phrase_len):
            dwell = grammar.dwell_mean
            if grammar.dwell_jitter:
                dwell += int(rng.integers(-grammar.dwell_jitter, grammar.dwell_jitter + 1))
            dwell = max(1, dwell)
            notes.append(note)
            dwells.append(dwell)
            total += dwell
            if total >= n_frames:
                break
            # a note without a successor restarts the walk at the map's lowest note
            note = mapping.get(note, min(mapping))
        ascending = not ascending

    frames = np.repeat(np.asarray(notes, dtype=np.int64), dwells)[:n_frames]
    if grammar.cent_noise_sd > 0:
        noise = np.rint(rng.normal(0.0, grammar.cent_noise_sd, size=n_frames)).astype(np.int64)
        frames = (frames + noise) % BINS_PER_OCTAVE
    return BinSequence(frames.astype(np.int16))


# =========================
# Grammar text format
# =========================

_TRANSITION = re.compile(r"^(\d+)>(\d+)$")


def _parse_transitions(value: str, name: str) -> dict:
    mapping = {}
    compact = re.sub(r"\s*-?>\s*", ">", value.strip())
    for token in re.split(r"[,;\s]+", compact):
        if not token:
            continue
        m = _TRANSITION.match(token)
        if not m:
            raise GrammarError(f"{name}: bad transition {token!r} (expected a>b)")
        mapping[int(m.group(1))] = int(m.group(2))
    return mapping


def parse_grammar(text: str) -> RagaGrammar:
    try:
        values = parse_key_values(text, source="grammar")
    except DataError as exc:
        raise GrammarError(str(exc)) from exc
    name = values.get("name", "")
    required = ("name", "scale", "ascent", "descent")
    missing = [k for k in required if k not in values]
    if missing:
        raise GrammarError(f"grammar {name or '?'} is missing {', '.join(missing)}")
    unknown = set(values) - set(required) - {"dwell", "cent_noise_sd", "phrase_len"}
    if unknown:
        raise GrammarError(f"grammar {name}: unknown keys {sorted(unknown)}")

    try:
        scale = tuple(int(b) for b in re.split(r"[,\s]+", values["scale"].strip()) if b)
        dwell = [int(x) for x in values.get("dwell", "20 0").split()] + [0]
        noise = float(values.get("cent_noise_sd", "0"))
        phrase_len = int(values.get("phrase_len", "8"))
    except ValueError as exc:
        raise GrammarError(f"grammar {name}: {exc}") from exc

    return RagaGrammar(
        name=name,
        scale=scale,
        ascent=_parse_transitions(values["ascent"], name),
        descent=_parse_transitions(values["descent"], name),
        dwell_mean=dwell[0],
        dwell_jitter=dwell[1],
        cent_noise_sd=noise,
        phrase_len=phrase_len,
    )


def load_grammar(path) -> RagaGrammar:
    return parse_grammar(Path(path).read_text(encoding="utf-8"))


def format_grammar(grammar: RagaGrammar) -> str:
    def transitions(mapping):
        return ", ".join(f"{a}>{b}" for a, b in mapping.items())

    return (
        f"name = {grammar.name}\n"
        f"scale = {' '.join(str(b) for b in grammar.scale)}\n"
        f"ascent = {transitions(grammar.ascent)}\n"
        f"descent = {transitions(grammar.descent)}\n"
        f"dwell = {grammar.dwell_mean} {grammar.dwell_jitter}\n"
        f"cent_noise_sd = {grammar.cent_noise_sd}\n"
        f"phrase_len = {grammar.phrase_len}\n"
    )


def _steps_up(scale) -> dict:
    return {a: b for a, b in zip(scale, scale[1:] + scale[:1])}


def _steps_down(scale) -> dict:
    return {b: a for a, b in _steps_up(scale).items()}


_VAKRA_SCALE = (0, 20, 40, 50, 70, 90, 110)
_CYCLE_SCALE = (0, 20, 40, 70)

DEFAULT_GRAMMARS = (
    # same note set and fixed dwell, opposite cycle order: identical PD, different SPD
    RagaGrammar("cycle_up", _CYCLE_SCALE, _steps_up(_CYCLE_SCALE), _steps_up(_CYCLE_SCALE),
                dwell_mean=25, dwell_jitter=0, cent_noise_sd=1.0),
    RagaGrammar("cycle_down", _CYCLE_SCALE, _steps_down(_CYCLE_SCALE), _steps_down(_CYCLE_SCALE),
                dwell_mean=25, dwell_jitter=0, cent_noise_sd=1.0),
    # stepwise ascent, descent by skips
    RagaGrammar("skip_descent", _VAKRA_SCALE, _steps_up(_VAKRA_SCALE),
                {0: 110, 110: 70, 70: 40, 40: 0, 90: 50, 50: 20, 20: 0},
                dwell_mean=20, dwell_jitter=4, cent_noise_sd=1.0),
    # its symmetric control
    RagaGrammar("step_both", _VAKRA_SCALE, _steps_up(_VAKRA_SCALE), _steps_down(_VAKRA_SCALE),
                dwell_mean=20, dwell_jitter=4, cent_noise_sd=1.0),
    RagaGrammar("pentatonic", (0, 20, 40, 70, 90), _steps_up((0, 20, 40, 70, 90)),
                _steps_down((0, 20, 40, 70, 90)), dwell_mean=20, dwell_jitter=4, cent_noise_sd=1.0),
    RagaGrammar("komal", (0, 10, 30, 50, 70, 80, 100), _steps_up((0, 10, 30, 50, 70, 80, 100)),
                _steps_down((0, 10, 30, 50, 70, 80, 100)), dwell_mean=20, dwell_jitter=4, cent_noise_sd=1.0),
)


# =========================
# Corpus writer
# =========================

def bins_to_frequencies(seq: BinSequence, tonic_bin: int, cfg: GridConfig = GridConfig()) -> np.ndarray:
    """Hz for each frame, placed in the octave above the absolute tonic bin; 0 when unvoiced."""
    top = cfg.bins_per_octave * cfg.octaves
    if not 0 <= tonic_bin <= top - cfg.bins_per_octave:
        raise ValueError(f"tonic bin {tonic_bin} leaves no octave of headroom on the grid")
    absolute = tonic_bin + seq.bins.astype(np.float64)
    freqs = cfg.ref_freq * np.exp2(absolute / cfg.bins_per_octave)
    freqs[seq.bins == UNVOICED] = 0.0
    return freqs


def tonic_frequency(tonic_bin: int, cfg: GridConfig = GridConfig()) -> float:
    return float(cfg.ref_freq * 2.0 ** (tonic_bin / cfg.bins_per_octave))


def pitch_file_text(freqs: np.ndarray, hop: float) -> str:
    return "".join(f"{i * hop:.5f}\t{f:.6f}\n" for i, f in enumerate(freqs))


def write_corpus(
    out_dir, grammars=DEFAULT_GRAMMARS, recordings_per_raga: int = 12, n_frames: int = 4000,
    seed: int = 0, cfg: GridConfig = GridConfig(), hop: float = 0.00444, tradition: str = "Hindustani",
) -> DatasetManifest:
    out_dir = Path(out_dir)
    entries = []
    for gi, grammar in enumerate(grammars):
        for j in range(recordings_per_raga):
            ss = np.random.SeedSequence([seed, gi, j])
            seq_seed, tonic_seed = ss.spawn(2)
            # tonic somewhere in C3..~A4 so the melody octave stays on the grid
            tonic_bin = int(np.random.default_rng(tonic_seed).integers(120, 330))
            seq = generate(grammar, n_frames, seq_seed)

            rec_id = f"{grammar.name}_{j:02d}"
            pitch_path = out_dir / "pitch" / f"{rec_id}.tsv"
            tonic_path = out_dir / "tonic" / f"{rec_id}.tonic"
            atomic_write_text(pitch_path, pitch_file_text(bins_to_frequencies(seq, tonic_bin, cfg), hop))
            atomic_write_text(tonic_path, f"{tonic_frequency(tonic_bin, cfg):.6f}\n")
            entries.append(ManifestEntry(rec_id, pitch_path, tonic_path, grammar.name, tradition))

        atomic_write_text(out_dir / "grammars" / f"{grammar.name}.txt", format_grammar(grammar))
        logger.info("wrote %d recordings for %s", recordings_per_raga, grammar.name)

    manifest = DatasetManifest(tuple(entries))
    atomic_write_text(out_dir / "manifest.csv", manifest_csv(manifest, relative_to=out_dir))
    return manifest


def with_noise(grammars, noise_sd: float) -> tuple[RagaGrammar, ...]:
    return tuple(dataclasses.replace(g, cent_noise_sd=noise_sd) for g in grammars)
