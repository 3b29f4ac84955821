from pathlib import Path

from raga.evaluation import accuracy, loocv
from raga.manifest import load_manifest
from raga.reports import write_evaluation
from raga.services import misclassified, record_evaluation

from ._base import SpdCommand


class Command(SpdCommand):
    help = "Leave-one-out evaluation of the ensemble; writes predictions, confusion and summary files."

    def add_command_arguments(self, parser):
        parser.add_argument("--manifest", required=True)
        parser.add_argument("--out", default=".", help="Report directory (default: current directory)")
        parser.add_argument("--svg", action="store_true", help="Also render confusion.svg")
        parser.add_argument("--record", action="store_true", help="Persist the run in the database (run `manage.py migrate` once first)")

    def handle(self, *args, **opts):
        config = self.resolve_config(opts)
        manifest = load_manifest(opts["manifest"])
        self.stdout.write(self.style.WARNING(f"Evaluating {len(manifest)} recordings ({config.describe()})..."))

        report = loocv(manifest, config)
        self.report_warnings(report.warnings)
        written = write_evaluation(report, opts["out"], svg=opts["svg"])
        for path in written:
            self.stdout.write(f" - {path}")

        if opts["record"]:
            run = record_evaluation(report, config, Path(opts["manifest"]).resolve())
            self.stdout.write(f"recorded as evaluation run {run.pk}")
            for result in misclassified(run):
                self.stdout.write(f"  misclassified {result} ({result.confidence:.2f})")

        wrong = sum(not r.correct for r in report.rows)
        self.stdout.write(
            self.style.SUCCESS(f"accuracy: {100.0 * accuracy(report):.2f}% ({len(report)} recordings, {wrong} misclassified)")
        )
