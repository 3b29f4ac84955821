import io
import shutil
import tempfile
from pathlib import Path
from unittest import mock

from django.db import OperationalError
from django.test import SimpleTestCase, TestCase

from raga.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, run
from raga.models import EvaluationRun, RecordingResult

from .helpers import TempDirMixin, held_notes, write_corpus_files


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


class UsageTests(SimpleTestCase):
    def test_no_subcommand(self):
        code, _, err = invoke()
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("usage:", err)

    def test_unknown_subcommand(self):
        code, _, err = invoke("classify")
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("unknown subcommand 'classify'", err)

    def test_missing_required_flag(self):
        code, _, _ = invoke("evaluate")
        self.assertEqual(code, EXIT_USAGE)

    def test_unknown_flag(self):
        code, _, _ = invoke("extract", "--manifest", "m.csv", "--bogus", "1")
        self.assertEqual(code, EXIT_USAGE)

    def test_relaxation_out_of_range(self):
        code, _, _ = invoke("extract", "--manifest", "m.csv", "--r", "7")
        self.assertEqual(code, EXIT_USAGE)

    def test_out_of_range_values_are_usage_errors(self):
        for flag, value in (("--k", "0"), ("--jobs", "0"), ("--max-seconds", "-1"), ("--ref-freq", "0"), ("--features", "bogus")):
            with self.subTest(flag=flag):
                code, _, err = invoke("evaluate", "--manifest", "m.csv", flag, value)
                self.assertEqual(code, EXIT_USAGE)
                self.assertIn(flag.lstrip("-"), err)

    def test_pipeline_commands_take_no_seed(self):
        code, _, _ = invoke("evaluate", "--manifest", "m.csv", "--seed", "3")
        self.assertEqual(code, EXIT_USAGE)

    def test_missing_manifest_is_a_data_error(self):
        root = Path(tempfile.mkdtemp(prefix="raga-test-"))
        self.addCleanup(shutil.rmtree, root, ignore_errors=True)
        code, _, err = invoke("extract", "--manifest", root / "absent.csv", "--cache-dir", root / "cache")
        self.assertEqual(code, EXIT_DATA)
        self.assertIn("cannot read manifest", err)

    def test_missing_model_store(self):
        root = Path(tempfile.mkdtemp(prefix="raga-test-"))
        self.addCleanup(shutil.rmtree, root, ignore_errors=True)
        code, _, err = invoke("predict", "--pitch", "p.tsv", "--tonic", "t.tonic", "--model", root)
        self.assertEqual(code, EXIT_DATA)
        self.assertIn("not a model store", err)


class SynthCommandTests(TempDirMixin, SimpleTestCase):
    def test_same_seed_same_corpus(self):
        a, b = self.make_tempdir(), self.make_tempdir()
        for out in (a, b):
            code, stdout, _ = invoke("synth", "--out", out, "--recordings-per-raga", 2, "--frames", 300, "--seed", 7)
            self.assertEqual(code, EXIT_OK)
            self.assertIn("Wrote 12 recordings of 6 ragas", stdout)
        self.assertEqual((a / "manifest.csv").read_bytes(), (b / "manifest.csv").read_bytes())
        self.assertEqual((a / "pitch" / "komal_01.tsv").read_bytes(), (b / "pitch" / "komal_01.tsv").read_bytes())
        self.assertTrue((a / "grammars" / "skip_descent.txt").exists())

    def test_grammar_file(self):
        out = self.make_tempdir()
        grammar = out / "g.txt"
        grammar.write_text(
            "name = little\nscale = 0 40 70\nascent = 0>40, 40>70\ndescent = 70>0\ndwell = 10 2\n",
            encoding="utf-8",
        )
        code, _, _ = invoke("synth", "--out", out / "corpus", "--grammar", grammar, "--recordings-per-raga", 2, "--frames", 200)
        self.assertEqual(code, EXIT_OK)
        lines = (out / "corpus" / "manifest.csv").read_text().splitlines()
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].startswith("little_00,pitch/little_00.tsv,"))

    def test_duplicate_grammar_names(self):
        out = self.make_tempdir()
        grammar = out / "g.txt"
        grammar.write_text("name = twice\nscale = 0 40\nascent = 0>40\ndescent = 40>0\n", encoding="utf-8")
        code, _, err = invoke("synth", "--out", out / "c", "--grammar", grammar, "--grammar", grammar)
        self.assertEqual(code, EXIT_DATA)
        self.assertIn("unique", err)

    def test_bad_grammar_file(self):
        out = self.make_tempdir()
        grammar = out / "g.txt"
        grammar.write_text("name = off\nscale = 0 45\nascent = 0>45\ndescent = 45>0\n", encoding="utf-8")
        code, _, _ = invoke("synth", "--out", out / "c", "--grammar", grammar)
        self.assertEqual(code, EXIT_DATA)

    def test_counts_must_be_positive(self):
        code, _, _ = invoke("synth", "--out", self.make_tempdir(), "--recordings-per-raga", 0)
        self.assertEqual(code, EXIT_USAGE)
        code, _, _ = invoke("synth", "--out", self.make_tempdir(), "--noise-sd", "-1")
        self.assertEqual(code, EXIT_USAGE)

    def test_seed_from_config_file(self):
        work = self.make_tempdir()
        config = work / "synth.cfg"
        config.write_text("seed = 11\n", encoding="utf-8")
        small = ("--recordings-per-raga", 1, "--frames", 200)

        def pitch_of(name, *argv):
            code, stdout, _ = invoke("synth", "--out", work / name, *small, *argv)
            self.assertEqual(code, EXIT_OK)
            return stdout, (work / name / "pitch" / "komal_00.tsv").read_bytes()

        stdout, from_file = pitch_of("file", "--config", config)
        self.assertIn("(seed 11)", stdout)
        _, from_flag = pitch_of("flag", "--seed", 11)
        _, flag_wins = pitch_of("override", "--config", config, "--seed", 5)
        _, plain = pitch_of("plain", "--seed", 5)
        self.assertEqual(from_file, from_flag)
        self.assertEqual(flag_wins, plain)
        self.assertNotEqual(from_file, plain)


class PipelineCommandTests(SimpleTestCase):
    """A small built-in corpus: six ragas, three recordings each."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.root = Path(tempfile.mkdtemp(prefix="raga-cmd-"))
        code, _, err = invoke("synth", "--out", cls.root / "corpus", "--recordings-per-raga", 3, "--frames", 1500)
        assert code == EXIT_OK, err
        cls.manifest = cls.root / "corpus" / "manifest.csv"
        cls.cache = cls.root / "cache"

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.root, ignore_errors=True)
        super().tearDownClass()

    def out_dir(self, name):
        path = self.root / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    def test_extract_fills_the_cache(self):
        cache = self.root / "extract-cache"
        code, stdout, _ = invoke("extract", "--manifest", self.manifest, "--cache-dir", cache, "--r", 2)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(list(cache.glob("*.spd"))), 18)
        self.assertIn("18 recordings", stdout)

    def test_evaluate_is_byte_identical_across_runs(self):
        first, second = self.out_dir("eval-1"), self.out_dir("eval-2")
        outputs = []
        for out in (first, second):
            code, stdout, _ = invoke(
                "evaluate", "--manifest", self.manifest, "--out", out, "--svg", "--cache-dir", self.cache, "--jobs", 2,
            )
            self.assertEqual(code, EXIT_OK)
            self.assertRegex(stdout, r"accuracy: \d+\.\d\d% \(18 recordings, \d+ misclassified\)")
            outputs.append(stdout.splitlines()[-1])
        self.assertEqual(outputs[0], outputs[1])
        for name in ("predictions.csv", "confusion.csv", "summary.txt", "confusion.svg"):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)
        self.assertEqual((first / "predictions.csv").read_text().count("\n"), 19)

    def test_flags_override_config_file(self):
        config = self.root / "run.cfg"
        config.write_text("# smaller model\nk = 1\nr = 2\nmetric = l1\n", encoding="utf-8")
        out = self.out_dir("eval-config")
        code, _, _ = invoke(
            "evaluate", "--manifest", self.manifest, "--out", out, "--config", config,
            "--k", 3, "--cache-dir", self.cache,
        )
        self.assertEqual(code, EXIT_OK)
        summary = (out / "summary.txt").read_text().splitlines()
        self.assertEqual(summary[0], "config: r=2 k=3 metric=l1 features=all")

    def test_bad_config_file(self):
        config = self.root / "bad.cfg"
        config.write_text("neighbours = 3\n", encoding="utf-8")
        code, _, err = invoke("evaluate", "--manifest", self.manifest, "--config", config, "--cache-dir", self.cache)
        self.assertEqual(code, EXIT_DATA)
        self.assertIn("unknown key", err)

    def test_out_of_range_config_value_is_a_data_error(self):
        config = self.root / "zero.cfg"
        config.write_text("k = 0\n", encoding="utf-8")
        code, _, err = invoke("evaluate", "--manifest", self.manifest, "--config", config, "--cache-dir", self.cache)
        self.assertEqual(code, EXIT_DATA)
        self.assertIn("k must be >= 1", err)

    def test_train_then_predict(self):
        store = self.root / "store"
        code, stdout, _ = invoke("train", "--manifest", self.manifest, "--out", store, "--cache-dir", self.cache)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("Trained 25 models over 18 recordings and 6 labels", stdout)
        self.assertEqual(len(list((store / "features").glob("*.spd"))), 18)
        self.assertEqual(len((store / "weights.txt").read_text().split()), 25)

        corpus = self.root / "corpus"
        code, stdout, _ = invoke(
            "predict", "--pitch", corpus / "pitch" / "pentatonic_01.tsv",
            "--tonic", corpus / "tonic" / "pentatonic_01.tonic", "--model", store,
        )
        self.assertEqual(code, EXIT_OK)
        lines = stdout.splitlines()
        self.assertEqual(len(lines), 6)
        self.assertEqual(lines[1].split()[0], lines[0])
        probs = [float(line.split()[1]) for line in lines[1:]]
        self.assertEqual(probs, sorted(probs, reverse=True))

    def test_analyze(self):
        out = self.out_dir("analyze")
        code, stdout, _ = invoke("analyze", "--manifest", self.manifest, "--out", out, "--svg", "--cache-dir", self.cache)
        self.assertEqual(code, EXIT_OK)
        lines = (out / "asymmetry.csv").read_text().splitlines()
        self.assertEqual(lines[0], "label,asymmetry,recordings")
        self.assertEqual(len(lines), 7)
        self.assertTrue((out / "asymmetry.svg").exists())
        self.assertIn("6 ragas", stdout)

    def test_sweep_columns(self):
        out = self.out_dir("sweep") / "sweep.csv"
        code, _, _ = invoke("sweep", "--manifest", self.manifest, "--out", out, "--cache-dir", self.cache)
        self.assertEqual(code, EXIT_OK)
        header, row = out.read_text().splitlines()
        self.assertEqual(header, "tradition,k1,k3,k5,k7,L1,DB,r0,r2,r4")
        self.assertTrue(row.startswith("Hindustani,"))
        self.assertEqual(len(row.split(",")), 10)

    def test_sweep_to_stdout(self):
        code, stdout, _ = invoke("sweep", "--manifest", self.manifest, "--ks", "1", "--rs", "4", "--cache-dir", self.cache)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(stdout.startswith("tradition,k1,L1,DB,r4\n"))


RISING = [0, 20, 40, 20] * 3
FALLING = [0, 70, 40, 70] * 3


class RecordFlagTests(TempDirMixin, TestCase):
    def evaluate_corpus(self, recordings, *extra):
        root = self.make_tempdir()
        manifest = write_corpus_files(root, [(i, label, held_notes(notes, 10)) for i, label, notes in recordings])
        return invoke(
            "evaluate", "--manifest", manifest, "--out", root / "report", "--k", 1,
            "--cache-dir", root / "cache", *extra,
        )

    def test_evaluate_record_persists_the_run(self):
        code, stdout, _ = self.evaluate_corpus(
            [("a1", "A", RISING), ("a2", "A", RISING), ("b1", "B", FALLING), ("b2", "B", FALLING)], "--record",
        )
        self.assertEqual(code, EXIT_OK)
        self.assertIn("recorded as evaluation run", stdout)
        self.assertNotIn("misclassified b", stdout)

        run = EvaluationRun.objects.get()
        self.assertEqual((run.neighbours, run.relaxation, run.metric), (1, 4, "db"))
        self.assertEqual(run.accuracy, 1.0)
        self.assertEqual(run.recordings, 4)
        self.assertEqual(len(run.weights), 25)
        self.assertEqual(RecordingResult.objects.filter(run=run).count(), 4)

    def test_record_lists_misclassified_recordings(self):
        # b2 sounds like the A recordings; b1's nearest neighbours then all carry A (ties by id)
        code, stdout, _ = self.evaluate_corpus(
            [("a1", "A", RISING), ("a2", "A", RISING), ("b1", "B", FALLING), ("b2", "B", RISING)], "--record",
        )
        self.assertEqual(code, EXIT_OK)
        self.assertIn("misclassified b1: B -> A", stdout)
        self.assertIn("misclassified b2: B -> A", stdout)
        self.assertNotIn("misclassified a", stdout)
        self.assertEqual(EvaluationRun.objects.get().accuracy, 0.5)

    def test_database_errors_are_data_errors(self):
        failing = mock.patch(
            "raga.management.commands.evaluate.record_evaluation",
            side_effect=OperationalError("no such table: raga_evaluationrun"),
        )
        with failing:
            code, _, err = self.evaluate_corpus(
                [("a1", "A", RISING), ("a2", "A", RISING), ("b1", "B", FALLING), ("b2", "B", FALLING)], "--record",
            )
        self.assertEqual(code, EXIT_DATA)
        self.assertIn("manage.py migrate", err)
