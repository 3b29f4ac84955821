from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from sklearn.metrics import accuracy_score, confusion_matrix
from sklearn.model_selection import LeaveOneOut

from .classifier import (
    BHATTACHARYYA,
    MANHATTAN,
    TrainedEnsemble,
    bhattacharyya,
    build_models,
    ensemble_predict,
    fit_ensemble_weights,
    model_stack,
)
from .config import RunConfig, read_config_file
from .exceptions import DataError, InsufficientTrainingError
from .features import N_NOTES, Direction, FeatureSet, SpdTensor, build_spd, extract_features
from .manifest import DatasetManifest, ManifestEntry, manifest_csv, parse_manifest
from .pitch import load_pitch_file, load_tonic_file, parse_pitch_file, parse_tonic_file, to_bin_sequence
from .storage import (
    FeatureCache,
    StoreLayout,
    atomic_write_text,
    cache_key,
    format_key_values,
    format_weights,
    parse_labels,
    parse_weights,
    read_spd,
    write_spd,
)

logger = logging.getLogger(__name__)


# =========================
# Extraction
# =========================

def extract_recording(entry: ManifestEntry, config: RunConfig) -> SpdTensor:
    """SPD tensor of one manifest entry, read from the cache when present."""
    try:
        pitch_bytes = entry.pitch_path.read_bytes()
        tonic = parse_tonic_file(entry.tonic_path.read_text(encoding="utf-8"))
        key = cache_key(pitch_bytes, tonic, config.r, config.grid, config.max_seconds)
        cache = FeatureCache(config.cache_dir)
        spd = cache.load(key)
        if spd is not None:
            return spd

        series = parse_pitch_file(pitch_bytes.decode("utf-8")).crop(config.max_seconds)
        spd = build_spd(to_bin_sequence(series, tonic, config.grid), config.r)
        cache.store(key, spd)
        return spd
    except (OSError, UnicodeDecodeError, DataError) as exc:
        raise DataError(f"recording {entry.id}: {exc}") from exc


def extract_manifest(manifest: DatasetManifest, config: RunConfig) -> dict[str, SpdTensor]:
    entries = manifest.sorted_by_id().entries
    logger.info("extracting %d recordings (r=%d, jobs=%d)", len(entries), config.r, config.jobs)
    spds = Parallel(n_jobs=config.jobs)(delayed(extract_recording)(e, config) for e in entries)
    return {e.id: spd for e, spd in zip(entries, spds)}


# =========================
# Training
# =========================

def out_of_fold_stacks(models, feature_sets: list[FeatureSet], ids, jobs: int = 1) -> np.ndarray:
    """(N, M, n_labels): every recording scored with itself excluded from all models."""
    folds = [int(test[0]) for _, test in LeaveOneOut().split(np.arange(len(ids)))]
    stacks = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(model_stack)(models, feature_sets[i], ids[i]) for i in folds
    )
    return np.stack(stacks)


def train_ensemble(
    ids, labels, vocabulary, feature_sets: list[FeatureSet], config: RunConfig,
) -> tuple[TrainedEnsemble, np.ndarray]:
    if len(ids) < config.k + 1:
        raise InsufficientTrainingError(
            f"{len(ids)} recordings cannot support leave-one-out with k={config.k}"
        )
    if len(vocabulary) < 2:
        raise DataError("at least two labels are needed to train a classifier")

    label_index = {label: i for i, label in enumerate(vocabulary)}
    y = np.asarray([label_index[label] for label in labels], dtype=np.int64)
    models = build_models(
        ids, feature_sets, y, len(vocabulary),
        k=config.k, metric=config.metric, feature_names=config.features,
    )
    stacks = out_of_fold_stacks(models, feature_sets, list(ids), jobs=config.jobs)
    weights = fit_ensemble_weights(stacks, y)
    return TrainedEnsemble(models=models, weights=weights, labels=tuple(vocabulary)), stacks


# =========================
# Leave-one-out evaluation
# =========================

@dataclass(frozen=True)
class ReportRow:
    id: str
    true_label: str
    predicted_label: str
    probabilities: np.ndarray  # (n_labels,)
    stack: np.ndarray  # (M, n_labels)

    @property
    def correct(self) -> bool:
        return self.true_label == self.predicted_label


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ReportRow, ...]
    labels: tuple[str, ...]
    weights: np.ndarray
    config: RunConfig
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.rows)


def _require_rows(report: EvalReport) -> None:
    if not report.rows:
        raise ValueError("report has no recordings")


def accuracy(report: EvalReport) -> float:
    _require_rows(report)
    return float(accuracy_score([r.true_label for r in report.rows], [r.predicted_label for r in report.rows]))


def confusion(report: EvalReport) -> np.ndarray:
    """counts[true][pred] over the report's label vocabulary."""
    _require_rows(report)
    return confusion_matrix(
        [r.true_label for r in report.rows],
        [r.predicted_label for r in report.rows],
        labels=list(report.labels),
    )


def _small_class_warnings(manifest: DatasetManifest) -> list[str]:
    out = []
    for label, n in sorted(manifest.label_counts().items()):
        if n < 2:
            msg = f"label {label!r} has {n} recording; it has no class-mates left under leave-one-out"
            logger.warning(msg)
            out.append(msg)
    return out


def loocv(manifest: DatasetManifest, config: RunConfig, spds: dict[str, SpdTensor] | None = None) -> EvalReport:
    manifest = manifest.sorted_by_id()
    if len(manifest) < config.k + 1:
        raise InsufficientTrainingError(
            f"{len(manifest)} recordings cannot support leave-one-out with k={config.k}"
        )
    warnings = _small_class_warnings(manifest)

    if spds is None:
        spds = extract_manifest(manifest, config)
    ids = list(manifest.ids)
    true_labels = [e.label for e in manifest]
    feature_sets = [extract_features(spds[i]) for i in ids]

    logger.info("leave-one-out over %d recordings (%s)", len(ids), config.describe())
    ensemble, stacks = train_ensemble(ids, true_labels, manifest.labels, feature_sets, config)

    rows = []
    for i, rec_id in enumerate(ids):
        probs, best = ensemble_predict(stacks[i], ensemble.weights)
        rows.append(
            ReportRow(
                id=rec_id,
                true_label=true_labels[i],
                predicted_label=ensemble.labels[best],
                probabilities=probs,
                stack=stacks[i],
            )
        )
    return EvalReport(
        rows=tuple(rows),
        labels=ensemble.labels,
        weights=ensemble.weights,
        config=config,
        warnings=tuple(warnings),
    )


# =========================
# Parameter sweep
# =========================

DEFAULT_SWEEP_KS = (1, 3, 5, 7)
DEFAULT_SWEEP_METRICS = (MANHATTAN, BHATTACHARYYA)
DEFAULT_SWEEP_RS = (0, 2, 4)
_METRIC_COLUMNS = {MANHATTAN: "L1", BHATTACHARYYA: "DB"}


@dataclass(frozen=True)
class SweepResult:
    columns: tuple[str, ...]
    accuracies: dict[str, float]
    traditions: tuple[str, ...]


def sweep_grid(
    config: RunConfig, ks=DEFAULT_SWEEP_KS, metrics=DEFAULT_SWEEP_METRICS, rs=DEFAULT_SWEEP_RS,
) -> list[tuple[str, RunConfig]]:
    """One column per parameter value, the other two parameters held at `config`."""
    cells = [(f"k{k}", config.replace(k=k)) for k in ks]
    cells += [(_METRIC_COLUMNS[config.replace(metric=m).metric], config.replace(metric=m)) for m in metrics]
    cells += [(f"r{r}", config.replace(r=r)) for r in rs]
    return cells


def sweep(
    manifest: DatasetManifest, config: RunConfig,
    ks=DEFAULT_SWEEP_KS, metrics=DEFAULT_SWEEP_METRICS, rs=DEFAULT_SWEEP_RS,
) -> SweepResult:
    spds_by_r: dict[int, dict[str, SpdTensor]] = {}
    done: dict[tuple, float] = {}
    accuracies = {}
    cells = sweep_grid(config, ks, metrics, rs)
    for column, cell in cells:
        key = (cell.r, cell.k, cell.metric, cell.features)
        if key not in done:
            if cell.r not in spds_by_r:
                spds_by_r[cell.r] = extract_manifest(manifest, cell)
            done[key] = accuracy(loocv(manifest, cell, spds=spds_by_r[cell.r]))
            logger.info("sweep %s (%s): accuracy %.4f", column, cell.describe(), done[key])
        accuracies[column] = done[key]
    traditions = tuple(sorted({e.tradition for e in manifest}))
    return SweepResult(columns=tuple(c for c, _ in cells), accuracies=accuracies, traditions=traditions)


# =========================
# Directional asymmetry
# =========================

@dataclass(frozen=True)
class AsymmetryRow:
    label: str
    score: float
    recordings: int


def asymmetry_score(tensors: list[SpdTensor]) -> float:
    """
    Mean Bhattacharyya distance between u[i][j][POSITIVE] and u[j][i][NEGATIVE]
    of the label-averaged tensor, skipping pairs where either slice fell back
    to the PD in every recording.
    """
    if not tensors:
        raise ValueError("asymmetry needs at least one recording")
    u = np.mean([t.u for t in tensors], axis=0)
    u = u / u.sum(axis=-1, keepdims=True)
    always_fallback = np.logical_and.reduce([t.fallback_mask for t in tensors])

    pos, neg = int(Direction.POSITIVE), int(Direction.NEGATIVE)
    scores = [
        bhattacharyya(u[i, j, pos], u[j, i, neg])
        for i in range(N_NOTES)
        for j in range(N_NOTES)
        if i != j and not (always_fallback[i, j, pos] or always_fallback[j, i, neg])
    ]
    return float(np.mean(scores)) if scores else 0.0


def analyze(manifest: DatasetManifest, config: RunConfig, spds: dict[str, SpdTensor] | None = None) -> list[AsymmetryRow]:
    if spds is None:
        spds = extract_manifest(manifest, config)
    rows = []
    for label in manifest.labels:
        members = [e.id for e in manifest.sorted_by_id() if e.label == label]
        rows.append(AsymmetryRow(label, asymmetry_score([spds[i] for i in members]), len(members)))
    return rows


# =========================
# Model store
# =========================

_STORED_KEYS = ("r", "k", "metric", "features", "bins_per_octave", "octaves", "ref_freq", "conf_threshold", "max_seconds")


def save_model_store(
    out_dir, manifest: DatasetManifest, ensemble: TrainedEnsemble,
    spds: dict[str, SpdTensor], config: RunConfig,
) -> StoreLayout:
    layout = StoreLayout(Path(out_dir))
    manifest = manifest.sorted_by_id()
    for rec_id in manifest.ids:
        write_spd(layout.feature_file(rec_id), spds[rec_id])

    stored = {key: getattr(config, key) for key in _STORED_KEYS}
    stored["features"] = ",".join(config.features)
    atomic_write_text(layout.config, format_key_values(stored))
    atomic_write_text(layout.labels, "".join(f"{label}\n" for label in ensemble.labels))
    atomic_write_text(layout.weights, format_weights(ensemble.weights))
    # written last: a store without its manifest is never mistaken for a complete one
    atomic_write_text(layout.manifest, manifest_csv(manifest))
    logger.info("model store written to %s (%d recordings)", layout.root, len(manifest))
    return layout


def load_model_store(root, jobs: int = 1) -> tuple[TrainedEnsemble, RunConfig]:
    layout = StoreLayout(Path(root))
    if not layout.manifest.exists():
        raise DataError(f"{layout.root} is not a model store (no {layout.manifest.name})")
    try:
        manifest = parse_manifest(layout.manifest.read_text(encoding="utf-8")).sorted_by_id()
        labels = parse_labels(layout.labels.read_text(encoding="utf-8"))
        weights = parse_weights(layout.weights.read_text(encoding="utf-8"))
        stored = read_config_file(layout.config)
    except OSError as exc:
        raise DataError(f"incomplete model store {layout.root}: {exc}") from exc

    config = RunConfig(**{k: v for k, v in stored.items() if k in _STORED_KEYS}, jobs=jobs)
    unknown = sorted({e.label for e in manifest} - set(labels))
    if unknown:
        raise DataError(f"model store labels.txt is missing {unknown}")
    if weights.shape != (len(config.features),):
        raise DataError(f"model store holds {weights.shape[0]} weights for {len(config.features)} models")

    feature_sets = []
    for rec_id in manifest.ids:
        try:
            spd = read_spd(layout.feature_file(rec_id))
        except OSError as exc:
            raise DataError(f"model store has no features for {rec_id}: {exc}") from exc
        if spd.relaxation != config.r:
            raise DataError(f"stored features of {rec_id} use r={spd.relaxation}, store config says r={config.r}")
        feature_sets.append(extract_features(spd))

    label_index = {label: i for i, label in enumerate(labels)}
    models = build_models(
        manifest.ids, feature_sets, [label_index[e.label] for e in manifest], len(labels),
        k=config.k, metric=config.metric, feature_names=config.features,
    )
    return TrainedEnsemble(models=models, weights=weights, labels=labels), config


def predict_recording(ensemble: TrainedEnsemble, config: RunConfig, pitch_path, tonic_path) -> np.ndarray:
    """Label probabilities for one pitch/tonic pair, extracted with the store's settings."""
    try:
        series = load_pitch_file(pitch_path).crop(config.max_seconds)
        tonic = load_tonic_file(tonic_path)
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(str(exc)) from exc
    spd = build_spd(to_bin_sequence(series, tonic, config.grid), config.r)
    probs, _ = ensemble.predict(extract_features(spd))
    return probs
