import math

import numpy as np
from django.test import SimpleTestCase

from raga.exceptions import PitchFileError, TonicFileError
from raga.pitch import (
    UNVOICED,
    BinSequence,
    GridConfig,
    PitchSeries,
    freq_to_bin,
    parse_pitch_file,
    parse_tonic_file,
    to_bin_sequence,
)

REF = 65.40639


def series(freqs, confidences=None) -> PitchSeries:
    freqs = np.asarray(freqs, dtype=np.float64)
    confs = np.full(freqs.shape, np.nan) if confidences is None else np.asarray(confidences, dtype=np.float64)
    return PitchSeries(times=np.arange(freqs.shape[0]) * 0.00444, frequencies=freqs, confidences=confs)


class PitchFileParsingTests(SimpleTestCase):
    def test_tab_separated_frames(self):
        s = parse_pitch_file("0.000\t220.0\n0.00444\t0.0")
        self.assertEqual(len(s), 2)
        self.assertEqual(s.frequencies.tolist(), [220.0, 0.0])
        self.assertTrue(np.isnan(s.confidences).all())

    def test_comma_with_confidence(self):
        s = parse_pitch_file("0.0,440.0,0.92")
        self.assertEqual(len(s), 1)
        self.assertAlmostEqual(s.confidences[0], 0.92)

    def test_space_runs_comments_and_blank_lines(self):
        s = parse_pitch_file("# header\n\n0.0   110.0\n0.01  0\n")
        self.assertEqual(s.times.tolist(), [0.0, 0.01])

    def test_non_numeric_field_names_the_line(self):
        with self.assertRaises(PitchFileError) as ctx:
            parse_pitch_file("0.0\tabc")
        self.assertEqual(ctx.exception.line_no, 1)
        self.assertIn("line 1", str(ctx.exception))

    def test_non_increasing_time(self):
        with self.assertRaises(PitchFileError) as ctx:
            parse_pitch_file("0.0\t100\n0.0\t110\n")
        self.assertEqual(ctx.exception.line_no, 2)

    def test_wrong_field_count_and_bad_values(self):
        for text in ("0.0\t1\t0.5\t9", "0.0\t-5", "0.0\t100\t1.5", "0.0"):
            with self.subTest(text=text), self.assertRaises(PitchFileError):
                parse_pitch_file(text)

    def test_crop_keeps_frames_before_limit(self):
        s = series([100.0] * 10).crop(0.01)
        # times 0, 0.00444, 0.00888 are < 0.01
        self.assertEqual(len(s), 3)
        self.assertEqual(len(series([1.0]).crop(None)), 1)


class TonicFileTests(SimpleTestCase):
    def test_values(self):
        self.assertEqual(parse_tonic_file("146.83\n"), 146.83)
        self.assertEqual(parse_tonic_file("  261.63  "), 261.63)

    def test_errors(self):
        for text in ("", "0", "-3", "abc", "100 200"):
            with self.subTest(text=text), self.assertRaises(TonicFileError):
                parse_tonic_file(text)


class FreqToBinTests(SimpleTestCase):
    def test_reference_and_a4(self):
        self.assertEqual(freq_to_bin(REF), 0)
        self.assertEqual(freq_to_bin(440.0), 90)

    def test_below_grid_clamps_to_zero(self):
        self.assertEqual(freq_to_bin(32.703), 0)

    def test_above_grid_clamps_to_top_bin(self):
        self.assertEqual(freq_to_bin(20000.0), 119)

    def test_zero_is_unvoiced(self):
        self.assertEqual(freq_to_bin(0.0), UNVOICED)

    def test_negative_frequency_rejected(self):
        with self.assertRaises(ValueError):
            freq_to_bin(-1.0)

    def test_round_trip_every_bin(self):
        for b in range(120):
            self.assertEqual(freq_to_bin(REF * 2 ** (10 * b / 1200)), b)

    def test_octave_folding(self):
        rng = np.random.default_rng(3)
        for f in rng.uniform(70.0, 1000.0, size=200):
            self.assertEqual(freq_to_bin(f), freq_to_bin(2 * f))

    def test_grid_must_span_720_bins(self):
        with self.assertRaises(ValueError):
            GridConfig(bins_per_octave=100)
        with self.assertRaises(ValueError):
            GridConfig(ref_freq=0)


class ToBinSequenceTests(SimpleTestCase):
    def test_tonic_maps_to_sa(self):
        self.assertEqual(to_bin_sequence(series([220.0]), 220.0).bins.tolist(), [0])

    def test_modular_subtraction(self):
        frame = REF * 2 ** (140 / 120)  # folded bin 20
        self.assertEqual(to_bin_sequence(series([frame]), 440.0).bins.tolist(), [50])

    def test_unvoiced_kept_in_place(self):
        seq = to_bin_sequence(series([220.0, 0.0, 220.0]), 220.0)
        self.assertEqual(seq.bins.tolist(), [0, UNVOICED, 0])

    def test_low_confidence_becomes_unvoiced(self):
        s = series([220.0, 220.0, 220.0], confidences=[0.9, 0.2, math.nan])
        seq = to_bin_sequence(s, 220.0, GridConfig(conf_threshold=0.5))
        self.assertEqual(seq.bins.tolist(), [0, UNVOICED, 0])

    def test_threshold_zero_disables_filtering(self):
        s = series([220.0], confidences=[0.0])
        self.assertEqual(to_bin_sequence(s, 220.0).bins.tolist(), [0])

    def test_non_positive_tonic(self):
        with self.assertRaises(ValueError):
            to_bin_sequence(series([220.0]), 0.0)

    def test_transposition_invariance(self):
        rng = np.random.default_rng(11)
        freqs = rng.uniform(120.0, 700.0, size=500)
        freqs[rng.random(500) < 0.1] = 0.0
        base = to_bin_sequence(series(freqs), 146.83)
        for s in (1, 5, 11, -7):
            shift = 2 ** (10 * s / 1200)
            moved = to_bin_sequence(series(freqs * shift), 146.83 * shift)
            np.testing.assert_array_equal(moved.bins, base.bins)

    def test_from_frames_validates(self):
        self.assertEqual(BinSequence.from_frames([1, None, 3]).bins.tolist(), [1, UNVOICED, 3])
        with self.assertRaises(ValueError):
            BinSequence.from_frames([120])
