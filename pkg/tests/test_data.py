import json

import numpy as np
import pytest

from voxtract.data import (
    DataConfig,
    DataError,
    ManifestRecord,
    build_corpus,
    import_csv_manifest,
    load_manifest,
    load_sample,
    make_mixture,
    sample_speakers,
    synth_noise,
    synth_utterance,
)

RNG = np.random.default_rng(42)
SPEAKERS = sample_speakers(6, np.random.default_rng(0))


def spectral_centroid(w):
    mag = np.abs(np.fft.rfft(w))
    freqs = np.fft.rfftfreq(len(w), 1 / 16000)
    return float((mag * freqs).sum() / mag.sum())


class TestSynthUtterance:
    def test_deterministic_from_seed(self):
        a = synth_utterance(SPEAKERS[0], 2.0, seed=5)
        b = synth_utterance(SPEAKERS[0], 2.0, seed=5)
        assert np.array_equal(a, b)

    def test_speakers_spectrally_distinct(self):
        a = synth_utterance(SPEAKERS[0], 2.0, seed=5)
        b = synth_utterance(SPEAKERS[1], 2.0, seed=5)
        assert abs(spectral_centroid(a) - spectral_centroid(b)) > 0

    def test_peak_normalized(self):
        w = synth_utterance(SPEAKERS[2], 1.5, seed=9)
        assert np.max(np.abs(w)) == pytest.approx(0.9, abs=1e-6)

    def test_duration_bounds(self):
        with pytest.raises(ValueError):
            synth_utterance(SPEAKERS[0], 0.5, seed=1)
        with pytest.raises(ValueError):
            synth_utterance(SPEAKERS[0], 11.0, seed=1)

    def test_length_matches_duration(self):
        w = synth_utterance(SPEAKERS[0], 2.25, seed=3)
        assert len(w) == int(2.25 * 16000)


class TestMakeMixture:
    def _waves(self):
        t = synth_utterance(SPEAKERS[0], 2.0, seed=11)
        i = synth_utterance(SPEAKERS[1], 2.2, seed=12)
        n = synth_noise(len(t), np.random.default_rng(13))
        return t, i, n

    def test_no_components_yields_identity(self):
        t, _, _ = self._waves()
        m = make_mixture(t)
        assert np.array_equal(m.mixture, m.target)

    def test_exact_float32_sum(self):
        t, i, n = self._waves()
        m = make_mixture(t, i, n, sir_db=2.0, snr_db=8.0)
        recon = (m.target + m.interferers[0]) + m.noise
        assert np.max(np.abs(m.mixture - recon)) == 0.0

    def test_sir_zero_equal_power(self):
        t, i, _ = self._waves()
        m = make_mixture(t, i, sir_db=0.0)
        p = lambda x: np.mean(np.asarray(x, np.float64) ** 2)
        assert p(m.interferers[0]) == pytest.approx(p(m.target), rel=1e-6)

    @pytest.mark.parametrize("sir,snr", [(-5.0, 0.0), (0.0, 7.5), (5.0, 15.0)])
    def test_realized_levels_within_hundredth_db(self, sir, snr):
        t, i, n = self._waves()
        m = make_mixture(t, i, n, sir_db=sir, snr_db=snr)
        p = lambda x: np.mean(np.asarray(x, np.float64) ** 2)
        assert 10 * np.log10(p(m.target) / p(m.interferers[0])) == pytest.approx(sir, abs=0.01)
        assert 10 * np.log10(p(m.target) / p(m.noise)) == pytest.approx(snr, abs=0.01)

    def test_components_cropped_to_min_length(self):
        t, i, n = self._waves()
        m = make_mixture(t, i[: len(t) // 2], n, sir_db=0.0, snr_db=10.0)
        assert len(m.mixture) == len(t) // 2

    def test_scenario_tagging(self):
        t, i, n = self._waves()
        assert make_mixture(t, i, n, 0.0, 10.0).scenario == "multi_noisy"
        assert make_mixture(t, i, sir_db=0.0).scenario == "multi_clean"
        assert make_mixture(t, noise=n, snr_db=10.0).scenario == "single_noisy"

    def test_silent_target_rejected(self):
        with pytest.raises(DataError, match="silent"):
            make_mixture(np.zeros(1000))


SMALL = DataConfig(
    n_speakers=4,
    utterances_per_speaker=20,
    utterance_seconds=(1.0, 1.5),
    train_mixtures=3,
    dev_mixtures=2,
    test_mixtures=2,
    seed=7,
)


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    manifest = build_corpus(SMALL, out)
    return out, manifest


class TestBuildCorpus:
    def test_utterance_count(self, small_corpus):
        out, _ = small_corpus
        wavs = list((out / "utts").rglob("*.wav"))
        assert len(wavs) == SMALL.n_speakers * SMALL.utterances_per_speaker

    def test_all_scenarios_present_per_split(self, small_corpus):
        _, manifest = small_corpus
        records = load_manifest(manifest)
        for split, want in (("train", 3), ("dev", 2), ("test", 2)):
            for scenario in ("multi_noisy", "multi_clean", "single_noisy"):
                rows = [r for r in records if r.split == split and r.scenario == scenario]
                assert len(rows) == want

    def test_splits_use_disjoint_utterances(self, small_corpus):
        out, _ = small_corpus
        meta = json.loads((out / "corpus_meta.json").read_text())
        splits = meta["utterance_splits"]
        assert set(splits["train"]).isdisjoint(splits["dev"])
        assert set(splits["train"]).isdisjoint(splits["test"])
        assert set(splits["dev"]).isdisjoint(splits["test"])

    def test_eval_enrollment_differs_from_target(self, small_corpus):
        out, manifest = small_corpus
        for rec in load_manifest(manifest):
            if rec.split == "train":
                assert rec.enrollment_path == rec.target_path
            else:
                assert rec.enrollment_path != rec.target_path
                sample = load_sample(rec, out)
                # same speaker, different utterance content
                assert len(sample.enrollment) != len(sample.target) or not np.array_equal(
                    sample.enrollment, sample.target
                )

    def test_single_speaker_samples_have_no_interferer(self, small_corpus):
        out, manifest = small_corpus
        for rec in load_manifest(manifest, scenario="single_noisy"):
            assert rec.sir_db is None
            sample = load_sample(rec, out)
            assert sample.interferers == []

    def test_reproducible_from_seed(self, small_corpus, tmp_path):
        out, manifest = small_corpus
        manifest2 = build_corpus(SMALL, tmp_path / "again")
        a = [json.loads(l) for l in open(manifest)]
        b = [json.loads(l) for l in open(manifest2)]
        assert [r["sample_id"] for r in a] == [r["sample_id"] for r in b]
        assert [r["sir_db"] for r in a] == [r["sir_db"] for r in b]
        # audio content identical too
        ya = load_sample(load_manifest(manifest)[0], out)
        yb = load_sample(load_manifest(manifest2)[0], tmp_path / "again")
        assert np.array_equal(ya.mixture, yb.mixture)

    def test_manifest_filtering(self, small_corpus):
        _, manifest = small_corpus
        rows = load_manifest(manifest, split="test", scenario="multi_noisy")
        assert len(rows) == 2
        assert all(r.split == "test" and r.scenario == "multi_noisy" for r in rows)

    def test_too_few_speakers_rejected(self):
        with pytest.raises(DataError):
            DataConfig(n_speakers=1)

    def test_missing_manifest_raises(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_manifest(tmp_path / "nope.jsonl")


class TestCsvAdapter:
    def test_roundtrip(self, tmp_path):
        csv = tmp_path / "mixtures.csv"
        csv.write_text(
            "mixture_ID,mixture_path,source_1_path,source_2_path,enrollment_path\n"
            "m1,mix/m1.wav,s1/a.wav,s2/b.wav,s1/enroll.wav\n"
            "m2,mix/m2.wav,s1/c.wav,s2/d.wav,\n"
        )
        manifest = import_csv_manifest(csv, "test", "multi_clean", tmp_path / "manifest.jsonl")
        rows = load_manifest(manifest)
        assert len(rows) == 2
        assert rows[0].target_path == "s1/a.wav"
        assert rows[0].enrollment_path == "s1/enroll.wav"
        assert rows[1].enrollment_path == "s1/c.wav"  # falls back to target

    def test_missing_column_rejected(self, tmp_path):
        csv = tmp_path / "bad.csv"
        csv.write_text("mixture_ID,source_1_path\nm1,s1.wav\n")
        with pytest.raises(DataError, match="missing column"):
            import_csv_manifest(csv, "test", "multi_clean", tmp_path / "m.jsonl")

    def test_missing_csv_rejected(self, tmp_path):
        with pytest.raises(DataError):
            import_csv_manifest(tmp_path / "nope.csv", "test", "multi_clean", tmp_path / "m.jsonl")
