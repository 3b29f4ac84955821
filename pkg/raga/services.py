from __future__ import annotations

from django.db import transaction

from .config import RunConfig
from .evaluation import EvalReport, accuracy
from .features import FEATURE_NAMES
from .models import EvaluationRun, RecordingResult


@transaction.atomic
def record_evaluation(report: EvalReport, config: RunConfig, manifest_path) -> EvaluationRun:
    """Persist one LOOCV report: the run row plus one result row per recording."""
    run = EvaluationRun.objects.create(
        manifest_path=str(manifest_path),
        relaxation=config.r,
        neighbours=config.k,
        metric=config.metric,
        features="all" if config.features == FEATURE_NAMES else ",".join(config.features),
        accuracy=accuracy(report),
        recordings=len(report),
        weights=[float(w) for w in report.weights],
    )
    label_index = {label: i for i, label in enumerate(report.labels)}
    RecordingResult.objects.bulk_create(
        [
            RecordingResult(
                run=run,
                recording_id=row.id,
                true_label=row.true_label,
                predicted_label=row.predicted_label,
                confidence=float(row.probabilities[label_index[row.predicted_label]]),
            )
            for row in sorted(report.rows, key=lambda r: r.id)
        ]
    )
    return run


def misclassified(run: EvaluationRun) -> list[RecordingResult]:
    return [r for r in run.results.all() if not r.correct]
