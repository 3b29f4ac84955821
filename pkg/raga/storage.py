"""
On-disk formats: the per-recording SPD cache file, the model store, and the
atomic write helper every output goes through.
"""
from __future__ import annotations

import hashlib
import logging
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

import numpy as np

from .exceptions import CacheFormatError, DataError
from .features import SPD_SHAPE, SpdTensor, check_relaxation
from .pitch import BINS_PER_OCTAVE, GridConfig

logger = logging.getLogger(__name__)

SPD_MAGIC = b"SPD1"
SPD_VERSION = 1
_HEADER = struct.Struct("<4sHH")
_U_VALUES = int(np.prod(SPD_SHAPE))
_MASK_VALUES = int(np.prod(SPD_SHAPE[:3]))
SPD_FILE_SIZE = _HEADER.size + 8 * (_U_VALUES + BINS_PER_OCTAVE) + _MASK_VALUES


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def encode_spd(spd: SpdTensor) -> bytes:
    return b"".join(
        [
            _HEADER.pack(SPD_MAGIC, SPD_VERSION, spd.relaxation),
            np.ascontiguousarray(spd.u, dtype="<f8").tobytes(),
            np.ascontiguousarray(spd.pd, dtype="<f8").tobytes(),
            np.ascontiguousarray(spd.fallback_mask, dtype=np.uint8).tobytes(),
        ]
    )


def decode_spd(data: bytes) -> SpdTensor:
    if len(data) < _HEADER.size:
        raise CacheFormatError("SPD file is truncated")
    magic, version, r = _HEADER.unpack_from(data)
    if magic != SPD_MAGIC:
        raise CacheFormatError(f"unknown SPD magic {magic!r}")
    if version != SPD_VERSION:
        raise CacheFormatError(f"unsupported SPD format version {version}")
    if len(data) != SPD_FILE_SIZE:
        raise CacheFormatError(f"SPD file has {len(data)} bytes, expected {SPD_FILE_SIZE}")

    offset = _HEADER.size
    u = np.frombuffer(data, dtype="<f8", count=_U_VALUES, offset=offset).reshape(SPD_SHAPE)
    offset += 8 * _U_VALUES
    pd = np.frombuffer(data, dtype="<f8", count=BINS_PER_OCTAVE, offset=offset)
    offset += 8 * BINS_PER_OCTAVE
    mask = np.frombuffer(data, dtype=np.uint8, count=_MASK_VALUES, offset=offset).reshape(SPD_SHAPE[:3])
    if np.any(mask > 1):
        raise CacheFormatError("fallback mask holds values other than 0/1")
    return SpdTensor(
        u=u.astype(np.float64),
        pd=pd.astype(np.float64),
        fallback_mask=mask.astype(bool),
        relaxation=check_relaxation(r),
    )


def write_spd(path, spd: SpdTensor) -> Path:
    return atomic_write_bytes(path, encode_spd(spd))


def read_spd(path) -> SpdTensor:
    return decode_spd(Path(path).read_bytes())


def cache_key(pitch_bytes: bytes, tonic: float, r: int, grid: GridConfig, max_seconds: float | None = None) -> str:
    h = hashlib.sha256()
    h.update(pitch_bytes)
    h.update(
        f"|tonic={tonic!r}|r={r}|ref={grid.ref_freq!r}|conf={grid.conf_threshold!r}|max={max_seconds!r}".encode()
    )
    return h.hexdigest()


class FeatureCache:
    """Directory of SPD files named by cache key."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.spd"

    def load(self, key: str) -> SpdTensor | None:
        path = self.path(key)
        if not path.exists():
            return None
        try:
            return read_spd(path)
        except CacheFormatError as exc:
            logger.warning("ignoring unreadable cache file %s: %s", path, exc)
            return None

    def store(self, key: str, spd: SpdTensor) -> Path:
        return write_spd(self.path(key), spd)


# =========================
# Model store
# =========================

STORE_MANIFEST = "manifest.csv"
STORE_LABELS = "labels.txt"
STORE_WEIGHTS = "weights.txt"
STORE_CONFIG = "config.txt"
STORE_FEATURES = "features"


@dataclass(frozen=True)
class StoreLayout:
    root: Path

    @property
    def manifest(self) -> Path:
        return self.root / STORE_MANIFEST

    @property
    def labels(self) -> Path:
        return self.root / STORE_LABELS

    @property
    def weights(self) -> Path:
        return self.root / STORE_WEIGHTS

    @property
    def config(self) -> Path:
        return self.root / STORE_CONFIG

    def feature_file(self, recording_id: str) -> Path:
        return self.root / STORE_FEATURES / f"{quote(recording_id, safe='')}.spd"


def format_weights(weights) -> str:
    return "".join(f"{float(w)!r}\n" for w in weights)


def parse_weights(text: str) -> np.ndarray:
    try:
        values = [float(line) for line in text.split()]
    except ValueError as exc:
        raise DataError(f"weights file holds a non-numeric value: {exc}") from exc
    return np.asarray(values, dtype=np.float64)


def parse_labels(text: str) -> tuple[str, ...]:
    labels = tuple(line.strip() for line in text.splitlines() if line.strip())
    if len(set(labels)) != len(labels):
        raise DataError("label vocabulary holds duplicates")
    return labels


def format_key_values(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def parse_key_values(text: str, source: str = "config") -> dict[str, str]:
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{source} line {line_no}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
