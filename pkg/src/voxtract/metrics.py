"""Intrusive separation metrics, speed benchmarking, and result reports.

SI-SDR follows the scale-invariant projection definition: the estimate is
compared against the closest scaled reference alpha*ref with
alpha = <est, ref> / ||ref||^2.  SI-SAR projects the estimate onto the
span of {reference, interference} and reports the energy ratio between
that projection and the residual artifact component.  Both are expressed
in dB and capped at +/-METRIC_CAP_DB so near-perfect estimates keep
aggregates finite.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

METRIC_CAP_DB = 50.0


def _as_pair(est, ref):
    est = np.asarray(est, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1:
        raise ValueError(f"signals must be equal-length 1-D, got {est.shape} vs {ref.shape}")
    return est, ref


def _ratio_db(num: float, den: float, cap: float) -> float:
    if num <= 0.0:
        return -cap
    if den <= 0.0:
        return cap
    return float(np.clip(10.0 * np.log10(num / den), -cap, cap))


def si_sdr(est, ref, zero_mean: bool = True, cap: float = METRIC_CAP_DB) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    ``zero_mean`` removes DC from both signals before projecting (set
    False to evaluate the raw projection formula).  A silent reference is
    a domain error; a silent estimate returns -cap.
    """
    est, ref = _as_pair(est, ref)
    if zero_mean:
        est = est - est.mean()
        ref = ref - ref.mean()
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise ValueError("reference signal is silent")
    if float(est @ est) == 0.0:
        return -cap
    alpha = float(est @ ref) / ref_energy
    target = alpha * ref
    noise = target - est
    return _ratio_db(float(target @ target), float(noise @ noise), cap)


def _sar_projection(est, ref, mixture, cap: float):
    """(si_sar_db, degenerate) via least-squares onto span{ref, mixture-ref}."""
    est, ref = _as_pair(est, ref)
    mixture = np.asarray(mixture, dtype=np.float64)
    if mixture.shape != ref.shape:
        raise ValueError("mixture length mismatch")
    basis = np.stack([ref, mixture - ref], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(basis, est, rcond=None)
    degenerate = rank < 2
    if degenerate:
        # collinear basis: fall back to projecting onto the reference alone
        ref_energy = float(ref @ ref)
        if ref_energy == 0.0:
            raise ValueError("reference signal is silent")
        proj = (float(est @ ref) / ref_energy) * ref
    else:
        proj = basis @ coef
    artifact = est - proj
    return _ratio_db(float(proj @ proj), float(artifact @ artifact), cap), degenerate


def si_sar(est, ref, mixture, cap: float = METRIC_CAP_DB) -> float:
    """Scale-invariant signal-to-artifact ratio in dB."""
    value, _ = _sar_projection(est, ref, mixture, cap)
    return value


@dataclass
class BenchResult:
    rtf: float
    eval_count: int
    wall_seconds: float
    audio_seconds: float


def bench(
    method: Callable,
    samples: Sequence,
    sample_rate: int = 16000,
    warmup: int = 1,
) -> BenchResult:
    """Wall-clock real-time factor of an extraction pipeline.

    ``method(sample)`` must return an object exposing ``waveform`` and
    ``eval_count``.  Warmup invocations are excluded from the timing.
    """
    samples = list(samples)
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    for s in samples[:warmup]:
        method(s)
    wall = 0.0
    audio = 0.0
    evals = 0
    for s in samples:
        t0 = time.perf_counter()
        result = method(s)
        wall += time.perf_counter() - t0
        audio += len(result.waveform) / sample_rate
        evals += result.eval_count
    if audio <= 0:
        raise ValueError("zero-duration audio")
    return BenchResult(rtf=wall / audio, eval_count=evals, wall_seconds=wall, audio_seconds=audio)


@dataclass
class SampleRecord:
    sample_id: str
    scenario: str
    method: str
    si_sdr_db: float
    si_sar_db: float
    rtf: float | None = None
    eval_count: int | None = None
    sar_degenerate: bool = False


@dataclass
class MetricReport:
    """Per-sample metric records plus recomputable aggregates."""

    records: list[SampleRecord] = field(default_factory=list)
    histogram_edges: tuple[float, ...] = tuple(np.arange(-30.0, 31.0, 2.0))

    def add(self, record: SampleRecord) -> None:
        self.records.append(record)

    def methods(self) -> list[str]:
        seen = []
        for r in self.records:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    def aggregate(self, method: str, scenario: str | None = None) -> dict:
        rows = [
            r
            for r in self.records
            if r.method == method and (scenario is None or r.scenario == scenario)
        ]
        if not rows:
            raise ValueError(f"no records for method={method!r} scenario={scenario!r}")
        sdr = np.array([r.si_sdr_db for r in rows])
        sar = np.array([r.si_sar_db for r in rows])
        counts, _ = np.histogram(sdr, bins=np.asarray(self.histogram_edges))
        return {
            "method": method,
            "scenario": scenario or "all",
            "n": len(rows),
            "si_sdr_mean": float(sdr.mean()),
            "si_sdr_median": float(np.median(sdr)),
            "si_sar_mean": float(sar.mean()),
            "si_sar_median": float(np.median(sar)),
            "histogram_counts": counts.tolist(),
        }

    def to_jsonl(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            for r in self.records:
                f.write(json.dumps(r.__dict__) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "MetricReport":
        report = cls()
        with open(path) as f:
            for line in f:
                report.add(SampleRecord(**json.loads(line)))
        return report

    def summary_table(self) -> str:
        scenarios = sorted({r.scenario for r in self.records})
        lines = [f"{'method':<16} {'scenario':<14} {'n':>4} {'si_sdr':>8} {'si_sar':>8}"]
        for method in self.methods():
            for scenario in scenarios:
                try:
                    agg = self.aggregate(method, scenario)
                except ValueError:
                    continue
                lines.append(
                    f"{method:<16} {scenario:<14} {agg['n']:>4} "
                    f"{agg['si_sdr_mean']:>8.2f} {agg['si_sar_mean']:>8.2f}"
                )
        return "\n".join(lines)
