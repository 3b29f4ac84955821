from raga.evaluation import sweep
from raga.manifest import load_manifest
from raga.reports import sweep_csv
from raga.storage import atomic_write_text

from ._base import SpdCommand


def _int_list(value: str) -> tuple[int, ...]:
    return tuple(int(v) for v in value.split(",") if v.strip())


class Command(SpdCommand):
    help = "Accuracy over k, distance metric and relaxation, one column per value."

    def add_command_arguments(self, parser):
        parser.add_argument("--manifest", required=True)
        parser.add_argument("--out", default=None, help="CSV path; printed to stdout when omitted")
        parser.add_argument("--ks", type=_int_list, default=(1, 3, 5, 7))
        parser.add_argument("--rs", type=_int_list, default=(0, 2, 4))

    def handle(self, *args, **opts):
        config = self.resolve_config(opts)
        manifest = load_manifest(opts["manifest"])
        result = sweep(manifest, config, ks=opts["ks"], rs=opts["rs"])
        text = sweep_csv(result)
        if opts["out"]:
            path = atomic_write_text(opts["out"], text)
            self.stdout.write(self.style.SUCCESS(f"Sweep written to {path}"))
        else:
            self.stdout.write(text, ending="")
