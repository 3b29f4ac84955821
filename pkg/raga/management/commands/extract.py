from raga.evaluation import extract_manifest
from raga.manifest import load_manifest

from ._base import SpdCommand


class Command(SpdCommand):
    help = "Extract SPD tensors for every recording of a manifest into the feature cache."

    def add_command_arguments(self, parser):
        parser.add_argument("--manifest", required=True)

    def handle(self, *args, **opts):
        config = self.resolve_config(opts)
        manifest = load_manifest(opts["manifest"])
        self.stdout.write(self.style.WARNING(f"Extracting {len(manifest)} recordings ({config.describe()})..."))
        spds = extract_manifest(manifest, config)
        fallbacks = sum(int(s.fallback_mask.sum()) for s in spds.values())
        self.stdout.write(f"cache: {config.cache_dir}")
        self.stdout.write(self.style.SUCCESS(f"Done. {len(spds)} recordings, {fallbacks} fallback cells in total."))
