from pathlib import Path

from raga.evaluation import analyze
from raga.manifest import load_manifest
from raga.reports import asymmetry_csv, asymmetry_svg
from raga.storage import atomic_write_bytes, atomic_write_text

from ._base import SpdCommand


class Command(SpdCommand):
    help = "Directional asymmetry score per raga (positive vs negative transition slices)."

    def add_command_arguments(self, parser):
        parser.add_argument("--manifest", required=True)
        parser.add_argument("--out", default=".", help="Output directory for asymmetry.csv")
        parser.add_argument("--svg", action="store_true", help="Also render asymmetry.svg")

    def handle(self, *args, **opts):
        config = self.resolve_config(opts)
        rows = analyze(load_manifest(opts["manifest"]), config)
        out = Path(opts["out"])
        atomic_write_text(out / "asymmetry.csv", asymmetry_csv(rows))
        if opts["svg"]:
            atomic_write_bytes(out / "asymmetry.svg", asymmetry_svg(rows))

        for row in sorted(rows, key=lambda r: (-r.score, r.label)):
            self.stdout.write(f"{row.label} {row.score:.6f}")
        self.stdout.write(self.style.SUCCESS(f"{len(rows)} ragas -> {out / 'asymmetry.csv'}"))
