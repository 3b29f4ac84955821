from raga.evaluation import extract_manifest, save_model_store, train_ensemble
from raga.features import extract_features
from raga.manifest import load_manifest

from ._base import SpdCommand


class Command(SpdCommand):
    help = "Fit the KNN ensemble on a manifest and write a model store directory."

    def add_command_arguments(self, parser):
        parser.add_argument("--manifest", required=True)
        parser.add_argument("--out", required=True, help="Model store directory")

    def handle(self, *args, **opts):
        config = self.resolve_config(opts)
        manifest = load_manifest(opts["manifest"]).sorted_by_id()
        spds = extract_manifest(manifest, config)

        feature_sets = [extract_features(spds[i]) for i in manifest.ids]
        ensemble, _ = train_ensemble(
            manifest.ids, [e.label for e in manifest], manifest.labels, feature_sets, config
        )
        layout = save_model_store(opts["out"], manifest, ensemble, spds, config)
        self.stdout.write(
            self.style.SUCCESS(
                f"Trained {len(ensemble.models)} models over {len(manifest)} recordings "
                f"and {len(ensemble.labels)} labels -> {layout.root}"
            )
        )
