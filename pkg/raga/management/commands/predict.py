from raga.evaluation import load_model_store, predict_recording

from ._base import SpdCommand

TOP_N = 5


class Command(SpdCommand):
    help = "Predict the raga of one pitch track with a trained model store."

    run_options = False

    def add_command_arguments(self, parser):
        parser.add_argument("--pitch", required=True)
        parser.add_argument("--tonic", required=True)
        parser.add_argument("--model", required=True, help="Directory written by `train`")

    def handle(self, *args, **opts):
        ensemble, config = load_model_store(opts["model"])
        probs = predict_recording(ensemble, config, opts["pitch"], opts["tonic"])

        # highest probability first, vocabulary order on ties
        ranked = sorted(range(len(probs)), key=lambda i: (-probs[i], i))
        self.stdout.write(ensemble.labels[ranked[0]])
        for i in ranked[:TOP_N]:
            self.stdout.write(f"{ensemble.labels[i]} {probs[i]:.6f}")
