"""Synthetic corpus of target / mixture / enrollment triples.

Speakers are parametric source-filter voices: a harmonic pulse source with
a per-speaker fundamental-frequency range and spectral rolloff, shaped by
two formant-like resonators.  Mixtures combine a target utterance with an
optional interfering speaker (scaled to a requested SIR) and optional
band-filtered noise (scaled to a requested SNR), covering three scenarios:

    multi_noisy   target + interferer + noise
    multi_clean   target + interferer
    single_noisy  target + noise

The invariant y == x0 + interferer + noise holds bit-exactly in float32,
which is also the on-disk WAV format.  Corpus generation is deterministic
from (config, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import sosfilt

from .audio import SAMPLE_RATE, read_wav, write_wav

SCENARIOS = ("multi_noisy", "multi_clean", "single_noisy")


class DataError(Exception):
    """Corpus generation or manifest consistency failure."""


@dataclass(frozen=True)
class SyntheticSpeaker:
    speaker_id: str
    f0_base: float  # Hz, center of the pitch range
    f0_span: float  # +/- semitone-ish wobble, as a ratio
    rolloff: float  # harmonic amplitude decay exponent
    formants: tuple[float, ...]  # resonance center frequencies, Hz
    formant_bw: float  # shared resonance bandwidth, Hz
    gender: str  # "f" or "m", from the pitch register


@dataclass(frozen=True)
class DataConfig:
    n_speakers: int = 20
    utterances_per_speaker: int = 50
    utterance_seconds: tuple[float, float] = (2.5, 4.0)
    train_mixtures: int = 100  # per scenario
    dev_mixtures: int = 20
    test_mixtures: int = 20
    sir_db_range: tuple[float, float] = (-5.0, 5.0)
    snr_db_range: tuple[float, float] = (0.0, 15.0)
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 1234

    def __post_init__(self):
        if self.n_speakers < 2:
            raise DataError("multi-speaker scenarios need at least 2 speakers")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise DataError("split fractions must sum to 1")


@dataclass
class MixtureSample:
    """One extraction task instance; all waveforms are float32."""

    sample_id: str
    scenario: str
    mixture: np.ndarray
    target: np.ndarray
    enrollment: np.ndarray
    speaker_id: str
    sir_db: float | None
    snr_db: float | None
    interferers: list[np.ndarray] = field(default_factory=list)
    noise: np.ndarray | None = None


@dataclass(frozen=True)
class ManifestRecord:
    sample_id: str
    scenario: str
    split: str
    mixture_path: str
    target_path: str
    enrollment_path: str
    speaker_id: str
    sir_db: float | None
    snr_db: float | None


def sample_speakers(n: int, rng: np.random.Generator) -> list[SyntheticSpeaker]:
    """Draw n distinct parametric voices, alternating pitch registers."""
    speakers = []
    for i in range(n):
        gender = "f" if i % 2 == 0 else "m"
        lo, hi = (165.0, 255.0) if gender == "f" else (85.0, 155.0)
        # spread bases evenly within the register, then jitter
        within = (i // 2) / max(1, (n + 1) // 2 - 1) if n > 2 else 0.5
        f0 = lo + (hi - lo) * within + rng.uniform(-3.0, 3.0)
        formants = (
            rng.uniform(350.0, 850.0),
            rng.uniform(1000.0, 2200.0),
            rng.uniform(2400.0, 3400.0),
        )
        speakers.append(
            SyntheticSpeaker(
                speaker_id=f"spk{i:03d}",
                f0_base=float(f0),
                f0_span=float(rng.uniform(0.04, 0.10)),
                rolloff=float(rng.uniform(0.6, 1.1)),
                formants=tuple(float(f) for f in formants),
                formant_bw=float(rng.uniform(80.0, 160.0)),
                gender=gender,
            )
        )
    return speakers


def _formant_sos(spk: SyntheticSpeaker, sr: int) -> np.ndarray:
    """Cascade of two-pole resonators at the speaker's formant frequencies,
    each normalized to unit gain at its own resonance."""
    sections = []
    for fc in spk.formants:
        r = np.exp(-np.pi * spk.formant_bw / sr)
        theta = 2.0 * np.pi * fc / sr
        a1, a2 = -2.0 * r * np.cos(theta), r * r
        b0 = abs(1.0 + a1 * np.exp(-1j * theta) + a2 * np.exp(-2j * theta))
        sections.append([b0, 0.0, 0.0, 1.0, a1, a2])
    return np.array(sections)


def synth_utterance(
    spk: SyntheticSpeaker, duration: float, seed: int, sr: int = SAMPLE_RATE
) -> np.ndarray:
    """Harmonic source-filter utterance, peak-normalized to 0.9."""
    if not 1.0 <= duration <= 10.0:
        raise ValueError(f"duration must lie in [1, 10] s, got {duration}")
    rng = np.random.default_rng(seed)
    n = int(round(duration * sr))
    t = np.arange(n) / sr

    # slow pitch contour: random low-frequency sinusoid mix inside the span
    contour = np.zeros(n)
    for _ in range(3):
        contour += rng.uniform(0.2, 1.0) * np.sin(
            2.0 * np.pi * rng.uniform(0.3, 2.5) * t + rng.uniform(0, 2 * np.pi)
        )
    contour /= max(1.0, np.max(np.abs(contour)))
    f0 = spk.f0_base * (1.0 + spk.f0_span * contour)

    phase = 2.0 * np.pi * np.cumsum(f0) / sr
    n_harmonics = int(min(40, (sr / 2 - 200) / spk.f0_base / (1 + spk.f0_span)))
    source = np.zeros(n)
    for h in range(1, n_harmonics + 1):
        source += h ** (-spk.rolloff) * np.sin(h * phase + rng.uniform(0, 2 * np.pi))

    voiced = sosfilt(_formant_sos(spk, sr), source)

    # syllable-rate amplitude modulation with occasional short dips
    env = 0.55 + 0.45 * np.sin(2.0 * np.pi * rng.uniform(2.0, 5.0) * t + rng.uniform(0, 2 * np.pi))
    env = 0.25 + 0.75 * env / env.max()
    out = voiced * env
    peak = np.max(np.abs(out))
    if peak == 0:
        raise DataError("synthesized utterance is silent")
    return out * (0.9 / peak)


def synth_noise(n: int, rng: np.random.Generator, sr: int = SAMPLE_RATE) -> np.ndarray:
    """Band-limited Gaussian noise with a random spectral tilt."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sr)
    tilt = rng.uniform(-1.0, 0.3)
    shape = np.where(freqs > 0, np.maximum(freqs, 1.0) ** tilt, 0.0)
    shape *= (freqs > 40.0) & (freqs < 7800.0)
    noise = np.fft.irfft(spectrum * shape, n=n)
    rms = np.sqrt(np.mean(noise**2))
    return noise / rms if rms > 0 else noise


def _power(x: np.ndarray) -> float:
    return float(np.mean(np.asarray(x, dtype=np.float64) ** 2))


def make_mixture(
    target: np.ndarray,
    interferer: np.ndarray | None = None,
    noise: np.ndarray | None = None,
    sir_db: float | None = None,
    snr_db: float | None = None,
    sample_id: str = "",
    speaker_id: str = "",
    enrollment: np.ndarray | None = None,
) -> MixtureSample:
    """Scale components to the requested SIR/SNR and sum them exactly.

    All components are cropped to the shortest length.  The returned
    waveforms are float32 and satisfy mixture == target + sum(parts)
    bit-exactly in float32 arithmetic.
    """
    parts = [np.asarray(target, dtype=np.float64)]
    if interferer is not None:
        parts.append(np.asarray(interferer, dtype=np.float64))
    if noise is not None:
        parts.append(np.asarray(noise, dtype=np.float64))
    n = min(len(p) for p in parts)
    parts = [p[:n] for p in parts]
    target64 = parts[0]

    p_target = _power(target64)
    if p_target == 0.0:
        raise DataError("target signal is silent")

    scaled = [target64]
    idx = 1
    interferer32 = None
    noise32 = None
    if interferer is not None:
        if sir_db is None:
            raise DataError("interferer given without sir_db")
        p_i = _power(parts[idx])
        if p_i == 0.0:
            raise DataError("interferer signal is silent")
        scaled.append(parts[idx] * np.sqrt(p_target / p_i / 10.0 ** (sir_db / 10.0)))
        idx += 1
    if noise is not None:
        if snr_db is None:
            raise DataError("noise given without snr_db")
        p_n = _power(parts[idx])
        if p_n == 0.0:
            raise DataError("noise signal is silent")
        scaled.append(parts[idx] * np.sqrt(p_target / p_n / 10.0 ** (snr_db / 10.0)))

    comps32 = [c.astype(np.float32) for c in scaled]
    mixture = comps32[0].copy()
    for c in comps32[1:]:
        mixture = mixture + c  # float32 accumulation, order fixed

    j = 1
    if interferer is not None:
        interferer32 = comps32[j]
        j += 1
    if noise is not None:
        noise32 = comps32[j]

    if interferer is not None and noise is not None:
        scenario = "multi_noisy"
    elif interferer is not None:
        scenario = "multi_clean"
    elif noise is not None:
        scenario = "single_noisy"
    else:
        scenario = "single_noisy"  # degenerate: y == x0

    enroll = comps32[0] if enrollment is None else np.asarray(enrollment, dtype=np.float32)
    return MixtureSample(
        sample_id=sample_id,
        scenario=scenario,
        mixture=mixture,
        target=comps32[0],
        enrollment=enroll,
        speaker_id=speaker_id,
        sir_db=sir_db,
        snr_db=snr_db,
        interferers=[interferer32] if interferer32 is not None else [],
        noise=noise32,
    )


def _split_utterances(n_utts: int, fractions, rng: np.random.Generator):
    """Deterministic disjoint train/dev/test utterance indices."""
    order = rng.permutation(n_utts)
    n_train = int(round(fractions[0] * n_utts))
    n_dev = int(round(fractions[1] * n_utts))
    return {
        "train": sorted(order[:n_train].tolist()),
        "dev": sorted(order[n_train : n_train + n_dev].tolist()),
        "test": sorted(order[n_train + n_dev :].tolist()),
    }


def build_corpus(config: DataConfig, out_dir: str | Path) -> Path:
    """Generate utterances and mixtures; returns the manifest path.

    Utterance splits are disjoint.  Training samples use the target
    utterance itself as enrollment; dev/test samples draw enrollment from
    utterances that never appear as targets in that split.
    """
    out_dir = Path(out_dir)
    rng = np.random.default_rng(config.seed)
    speakers = sample_speakers(config.n_speakers, rng)

    utt_dir = out_dir / "utts"
    utt_paths: dict[str, list[Path]] = {}
    for spk in speakers:
        paths = []
        for u in range(config.utterances_per_speaker):
            dur = rng.uniform(*config.utterance_seconds)
            wave = synth_utterance(spk, dur, seed=int(rng.integers(2**31)))
            p = utt_dir / spk.speaker_id / f"utt{u:03d}.wav"
            write_wav(p, wave)
            paths.append(p)
        utt_paths[spk.speaker_id] = paths

    splits = _split_utterances(config.utterances_per_speaker, config.split_fractions, rng)

    records: list[ManifestRecord] = []
    counts = {"train": config.train_mixtures, "dev": config.dev_mixtures, "test": config.test_mixtures}
    mix_dir = out_dir / "mixes"
    for split, per_scenario in counts.items():
        idxs = splits[split]
        if split == "train":
            target_pool, enroll_pool = idxs, None
        else:
            # reserve the tail of the split for enrollment-only use
            if len(idxs) < 2:
                raise DataError(
                    f"split {split!r} has {len(idxs)} utterances per speaker; need >= 2 "
                    "for disjoint targets and enrollments (increase utterances_per_speaker)"
                )
            n_enroll = max(1, len(idxs) // 3)
            target_pool, enroll_pool = idxs[:-n_enroll], idxs[-n_enroll:]
        for scenario in SCENARIOS:
            for k in range(per_scenario):
                sid = f"{split}_{scenario}_{k:04d}"
                ti, ij = rng.choice(len(speakers), size=2, replace=False)
                target_spk = speakers[ti]
                interf_spk = speakers[ij]
                target_utt = int(rng.choice(target_pool))
                target = read_wav(utt_paths[target_spk.speaker_id][target_utt])

                interferer = None
                sir_db = None
                if scenario.startswith("multi"):
                    interferer = read_wav(
                        utt_paths[interf_spk.speaker_id][int(rng.choice(idxs))]
                    )
                    sir_db = float(rng.uniform(*config.sir_db_range))
                noise = None
                snr_db = None
                if scenario.endswith("noisy"):
                    noise = synth_noise(len(target), rng)
                    snr_db = float(rng.uniform(*config.snr_db_range))

                sample = make_mixture(
                    target,
                    interferer,
                    noise,
                    sir_db,
                    snr_db,
                    sample_id=sid,
                    speaker_id=target_spk.speaker_id,
                )

                y_path = mix_dir / split / f"{sid}_y.wav"
                x_path = mix_dir / split / f"{sid}_x0.wav"
                write_wav(y_path, sample.mixture)
                write_wav(x_path, sample.target)
                if split == "train":
                    enroll_path = x_path
                else:
                    enroll_utt = int(rng.choice(enroll_pool))
                    enroll_path = utt_paths[target_spk.speaker_id][enroll_utt]

                records.append(
                    ManifestRecord(
                        sample_id=sid,
                        scenario=scenario,
                        split=split,
                        mixture_path=str(y_path.relative_to(out_dir)),
                        target_path=str(x_path.relative_to(out_dir)),
                        enrollment_path=str(enroll_path.relative_to(out_dir)),
                        speaker_id=target_spk.speaker_id,
                        sir_db=sir_db,
                        snr_db=snr_db,
                    )
                )

    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w") as f:
        for r in records:
            f.write(json.dumps(r.__dict__) + "\n")
    meta = {
        "config": {
            k: list(v) if isinstance(v, tuple) else v for k, v in config.__dict__.items()
        },
        "speakers": [
            {**s.__dict__, "formants": list(s.formants)} for s in speakers
        ],
        "utterance_splits": splits,
    }
    with open(out_dir / "corpus_meta.json", "w") as f:
        json.dump(meta, f, indent=2)
    return manifest_path


def load_manifest(
    manifest_path: str | Path,
    split: str | None = None,
    scenario: str | None = None,
) -> list[ManifestRecord]:
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"manifest not found: {manifest_path}")
    records = []
    with open(manifest_path) as f:
        for line in f:
            rec = ManifestRecord(**json.loads(line))
            if split is not None and rec.split != split:
                continue
            if scenario is not None and rec.scenario != scenario:
                continue
            records.append(rec)
    return records


def load_sample(record: ManifestRecord, corpus_dir: str | Path) -> MixtureSample:
    corpus_dir = Path(corpus_dir)
    return MixtureSample(
        sample_id=record.sample_id,
        scenario=record.scenario,
        mixture=read_wav(corpus_dir / record.mixture_path),
        target=read_wav(corpus_dir / record.target_path),
        enrollment=read_wav(corpus_dir / record.enrollment_path),
        speaker_id=record.speaker_id,
        sir_db=record.sir_db,
        snr_db=record.snr_db,
    )


def import_csv_manifest(
    csv_path: str | Path,
    split: str,
    scenario: str,
    out_manifest: str | Path,
    enrollment_column: str = "enrollment_path",
) -> Path:
    """Adapt an external mixture CSV (one row per mixture) to the manifest
    format.  Expects columns mixture_ID, mixture_path, source_1_path and an
    enrollment column; the first source is treated as the target speaker.
    """
    import csv as csv_module

    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise DataError(f"csv not found: {csv_path}")
    records = []
    with open(csv_path) as f:
        for row in csv_module.DictReader(f):
            try:
                records.append(
                    ManifestRecord(
                        sample_id=row["mixture_ID"],
                        scenario=scenario,
                        split=split,
                        mixture_path=row["mixture_path"],
                        target_path=row["source_1_path"],
                        enrollment_path=row.get(enrollment_column) or row["source_1_path"],
                        speaker_id=row.get("speaker_1_ID", row["mixture_ID"].split("_")[0]),
                        sir_db=None,
                        snr_db=None,
                    )
                )
            except KeyError as e:
                raise DataError(f"csv row missing column {e}") from e
    out_manifest = Path(out_manifest)
    out_manifest.parent.mkdir(parents=True, exist_ok=True)
    with open(out_manifest, "w") as f:
        for r in records:
            f.write(json.dumps(r.__dict__) + "\n")
    return out_manifest
