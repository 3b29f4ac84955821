from django.conf import settings

from raga.exceptions import GrammarError
from raga.manifest import TRADITIONS
from raga.synth import DEFAULT_GRAMMARS, load_grammar, with_noise, write_corpus

from ._base import SpdCommand, add_config_argument, non_negative_float, positive_int


class Command(SpdCommand):
    help = "Write a synthetic corpus (pitch files, tonic files, manifest) from raga grammars."

    run_options = False

    def add_command_arguments(self, parser):
        add_config_argument(parser)
        parser.add_argument("--out", required=True)
        parser.add_argument(
            "--grammar",
            action="append",
            default=[],
            help="Grammar file; repeat for several. Without it the built-in library is used.",
        )
        parser.add_argument("--recordings-per-raga", type=positive_int, default=12)
        parser.add_argument("--frames", type=positive_int, default=4000)
        parser.add_argument("--noise-sd", type=non_negative_float, default=None, help="Override every grammar's noise (bins)")
        parser.add_argument("--seed", type=int, default=None, help="Corpus seed (default: config file, then SPD_SEED)")
        parser.add_argument("--tradition", choices=TRADITIONS, default="Hindustani")

    def handle(self, *args, **opts):
        # seed and grid follow the same flag > config file > settings order as the pipeline
        config = self.resolve_config(opts, flags=("seed",))
        grammars = tuple(load_grammar(p) for p in opts["grammar"]) or DEFAULT_GRAMMARS
        if opts["noise_sd"] is not None:
            grammars = with_noise(grammars, opts["noise_sd"])
        names = [g.name for g in grammars]
        if len(set(names)) != len(names):
            raise GrammarError(f"grammar names must be unique, got {', '.join(names)}")

        manifest = write_corpus(
            opts["out"],
            grammars,
            recordings_per_raga=opts["recordings_per_raga"],
            n_frames=opts["frames"],
            seed=config.seed,
            cfg=config.grid,
            hop=getattr(settings, "SPD_HOP_SECONDS", 0.00444),
            tradition=opts["tradition"],
        )
        self.stdout.write(
            self.style.SUCCESS(f"Wrote {len(manifest)} recordings of {len(grammars)} ragas to {opts['out']} (seed {config.seed})")
        )
