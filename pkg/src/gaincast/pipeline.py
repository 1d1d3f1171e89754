"""Simulated DU -> midhaul -> RIC pipeline and the inference benchmark.

The producer stage encodes windows to latent blocks and frames them; a
bounded in-process queue models the transport; the consumer stage decodes
frames, reconstructs windows and runs the predictor. Framing and
queueing are numerically transparent: the pipeline's outputs equal the
directly composed models.
"""
from __future__ import annotations

import queue
import statistics
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autoencoder import AeModel, INPUT_LEN, LATENT_SIZE
from .data import flatten_windows, unflatten_windows
from .framing import HEADER_LEN, MSG_LATENT, decode_frame, encode_frame
from .predictor import PredictorModel


@dataclass
class PayloadLedger:
    window_count: int = 0
    raw_bytes: int = 0
    compressed_bytes: int = 0
    header_bytes: int = 0

    def record_window(self):
        self.window_count += 1
        self.raw_bytes += INPUT_LEN * 4
        self.compressed_bytes += LATENT_SIZE * 4
        self.header_bytes += HEADER_LEN

    @property
    def payload_reduction_pct(self) -> float:
        return 100.0 * (1.0 - self.compressed_bytes / self.raw_bytes)

    @property
    def wire_reduction_pct(self) -> float:
        """Reduction including frame headers, against headerless raw payload."""
        wire = self.compressed_bytes + self.header_bytes
        raw_wire = self.raw_bytes + self.header_bytes
        return 100.0 * (1.0 - wire / raw_wire)


@dataclass
class PipelineResult:
    predictions: np.ndarray
    ledger: PayloadLedger
    drained_early: bool = False


def run_pipeline(ae: AeModel, predictor: PredictorModel, windows: np.ndarray,
                 queue_size: int = 64, chunk: int = 64) -> PipelineResult:
    """Stream predictor windows [n, W, n_ap] through the framed transport.

    The producer thread encodes and frames latent blocks; the consumer
    (caller thread) decodes, reconstructs and predicts.
    """
    n, W, n_ap = windows.shape
    chan: queue.Queue = queue.Queue(maxsize=queue_size)
    ledger = PayloadLedger()
    producer_error: list[BaseException] = []

    def produce():
        try:
            flat = flatten_windows(windows)
            with ad.no_grad():
                for i in range(0, n, chunk):
                    latents = ae.encode(flat[i:i + chunk]).data
                    for j in range(latents.shape[0]):
                        frame = encode_frame(latents[j].reshape(-1), seq=i + j,
                                             n_ap=n_ap, msg_type=MSG_LATENT)
                        chan.put(frame)
        except BaseException as e:  # surfaced to the consumer side
            producer_error.append(e)
        finally:
            chan.put(None)

    t = threading.Thread(target=produce, daemon=True)
    t.start()

    latents = np.zeros((n, 15, 5), dtype=np.float32)
    received = 0
    drained_early = False
    while True:
        frame = chan.get()
        if frame is None:
            drained_early = received < n
            break
        payload, seq, frame_ap, _ = decode_frame(frame)
        latents[seq] = payload.reshape(15, 5)
        ledger.record_window()
        received += 1
    t.join()
    if producer_error:
        raise producer_error[0]

    preds = np.zeros((n, n_ap), dtype=np.float32)
    with ad.no_grad():
        for i in range(0, received, chunk):
            rec = ae.decode(latents[i:i + chunk]).data
            preds[i:i + chunk] = predictor.predict_fast(
                unflatten_windows(rec, n_ap))
    return PipelineResult(predictions=preds[:received], ledger=ledger,
                          drained_early=drained_early)


def compose_direct(ae: AeModel, predictor: PredictorModel,
                   windows: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Reference composition without framing or transport."""
    n, W, n_ap = windows.shape
    flat = flatten_windows(windows)
    preds = np.zeros((n, n_ap), dtype=np.float32)
    with ad.no_grad():
        for i in range(0, n, chunk):
            rec = ae.reconstruct(flat[i:i + chunk]).data
            preds[i:i + chunk] = predictor.predict_fast(unflatten_windows(rec, n_ap))
    return preds


# -- latency / throughput harness ---------------------------------------


@dataclass
class BenchResult:
    label: str
    batch: int
    total_samples: int
    wall_time_s: float
    latency_ms: float            # per sample, median over repetitions
    qps: float
    latency_min_ms: float = 0.0
    latency_max_ms: float = 0.0
    improvement_pct: float | None = None

    def with_reference(self, reference: "BenchResult") -> "BenchResult":
        self.improvement_pct = 100.0 * (self.qps / reference.qps - 1.0)
        return self


def bench(model_fn, sample_shape, batch: int = 250, warmup: int = 3,
          repetitions: int = 10, seed: int = 0, label: str = "model",
          threads: int = 1) -> BenchResult:
    """Median per-sample latency and QPS of ``model_fn`` over fixed batches.

    ``model_fn`` consumes one [batch, *sample_shape] float32 array per call.
    Zero-duration measurements retry with a larger repetition count.
    """
    if repetitions < 3:
        raise ValueError("need at least 3 repetitions")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((batch, *sample_shape)).astype(np.float32)
    for _ in range(warmup):
        model_fn(x)

    def measure(reps):
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            if threads > 1:
                workers = [threading.Thread(target=model_fn, args=(x,))
                           for _ in range(threads)]
                for w in workers:
                    w.start()
                for w in workers:
                    w.join()
            else:
                model_fn(x)
            times.append(time.perf_counter() - t0)
        return times

    reps = repetitions
    times = measure(reps)
    while min(times) <= 0.0 and reps < 10_000:
        reps *= 4
        times = measure(reps)
    per_call = batch * max(threads, 1)
    lat = [t / per_call * 1000.0 for t in times]
    lat_med = statistics.median(lat)
    total = per_call * reps
    return BenchResult(
        label=label, batch=batch, total_samples=total,
        wall_time_s=sum(times), latency_ms=lat_med,
        qps=1000.0 / lat_med,
        latency_min_ms=min(lat), latency_max_ms=max(lat),
    )


def bench_predictor(model: PredictorModel, window: int, optimized: bool,
                    batch: int = 250, repetitions: int = 10, seed: int = 0,
                    label: str | None = None) -> BenchResult:
    """Benchmark the predictor's plain (taped) or optimized (tape-free) path."""
    if optimized:
        fn = model.predict_fast
    else:
        def fn(x):
            return model.predict(x).data
    name = label or f"predictor[{model.cfg.forward_hidden},{model.cfg.backward_hidden}]"
    name += "/optimized" if optimized else "/plain"
    return bench(fn, (window, 8), batch=batch, repetitions=repetitions,
                 seed=seed, label=name)
