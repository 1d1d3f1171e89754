"""Training strategies for the compression + prediction pipeline.

Four strategies are supported:

* ``baseline-no-ae``   — predictor alone on raw normalized windows.
* ``independent``      — autoencoder and predictor trained separately on
  their own objectives; evaluation feeds the predictor reconstructed
  windows, exposing the train/inference domain gap.
* ``compression-aware``— autoencoder trained first and frozen; the
  predictor trains directly on reconstructed windows.
* ``end-to-end``       — joint loss alpha * reconstruction + (1 - alpha)
  * prediction, gradients flowing through decoder and encoder.

Protocol defaults: Adam at lr 0.01, minibatch 32, at least 1000 update
iterations with early stopping on a validation subset.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Adam
from .autoencoder import AeModel
from .checkpoint import digest
from .data import TrajectoryDataset, flatten_windows, unflatten_windows
from .predictor import PredictorModel

STRATEGIES = ("baseline-no-ae", "independent", "compression-aware", "end-to-end")


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainPlan:
    strategy: str = "compression-aware"
    lr: float = 0.01
    batch: int = 32
    min_iterations: int = 1000
    max_iterations: int = 4000
    eval_interval: int = 50
    patience: int = 20
    alpha: float = 0.5          # end-to-end reconstruction weight
    seed: int = 0
    val_cap: int = 1024         # windows used for early-stopping evals

    def __post_init__(self):
        if self.min_iterations < 1000:
            raise ValueError("training protocol requires at least 1000 iterations")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; one of {STRATEGIES}")


@dataclass
class TrainReport:
    strategy: str
    rmse: float
    delta_pct: float | None = None
    baseline_rmse: float | None = None
    iterations: int = 0
    stopped_early: bool = False
    wall_clock_s: float = 0.0
    history: list[tuple[int, float, float]] = field(default_factory=list)
    val_predictions: np.ndarray | None = None
    val_targets: np.ndarray | None = None

    def with_baseline(self, baseline_rmse: float) -> "TrainReport":
        self.baseline_rmse = baseline_rmse
        self.delta_pct = delta_rmse_pct(baseline_rmse, self.rmse)
        return self


def delta_rmse_pct(rmse_base: float, rmse: float) -> float:
    """Percent improvement (positive) or degradation (negative) vs a baseline."""
    return 100.0 * (rmse_base - rmse) / rmse_base


def early_stop(history: list[tuple[int, float]], patience: int,
               min_iterations: int, min_delta: float = 1e-6) -> bool:
    """History is [(iteration, val_loss), ...] in evaluation order.

    Never stops before ``min_iterations``; stops once the last ``patience``
    evaluations all failed to improve the running best by more than
    ``min_delta``.
    """
    if not history:
        raise ValueError("early_stop needs a non-empty history")
    if history[-1][0] < min_iterations:
        return False
    if len(history) <= patience:
        return False
    best = min(loss for _, loss in history[:-patience])
    recent = [loss for _, loss in history[-patience:]]
    return all(loss >= best - min_delta for loss in recent)


def _batch_stream(n: int, batch: int, seed: int):
    """Endless shuffled-epoch minibatch index stream."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xB47C,)))
    while True:
        order = rng.permutation(n)
        for i in range(0, n - batch + 1, batch):
            yield order[i:i + batch]


def _training_loop(step_fn, eval_fn, snapshot_fn, restore_fn, plan: TrainPlan):
    """Shared minibatch loop with early stopping and divergence recovery.

    Returns (history, iterations, stopped_early). ``step_fn(it)`` runs one
    update and returns the train loss; ``eval_fn()`` returns validation
    loss; snapshot/restore guard against divergence mid-run.
    """
    history: list[tuple[int, float, float]] = []
    eval_history: list[tuple[int, float]] = []
    last_good = snapshot_fn()
    it = 0
    while it < plan.max_iterations:
        it += 1
        train_loss = step_fn(it)
        if not np.isfinite(train_loss):
            restore_fn(last_good)
            raise DivergenceError(
                f"non-finite training loss at iteration {it}; "
                "restored last checkpointed state"
            )
        if it % plan.eval_interval == 0:
            val_loss = eval_fn()
            history.append((it, float(train_loss), float(val_loss)))
            eval_history.append((it, float(val_loss)))
            if np.isfinite(val_loss):
                last_good = snapshot_fn()
            if early_stop(eval_history, plan.patience, plan.min_iterations):
                return history, it, True
    return history, it, False


def decode_windows(ae: AeModel, x: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Round-trip predictor windows [n,W,8] through the autoencoder."""
    flat = flatten_windows(x)
    out = np.empty_like(flat)
    with ad.no_grad():
        for i in range(0, flat.shape[0], chunk):
            out[i:i + chunk] = ae.reconstruct(flat[i:i + chunk]).data
    return unflatten_windows(out, x.shape[2])


def predictor_rmse(model: PredictorModel, x: np.ndarray, y: np.ndarray,
                   chunk: int = 2048):
    """(rmse, predictions) over a window set, batched, tape-free."""
    preds = np.empty_like(y)
    for i in range(0, x.shape[0], chunk):
        preds[i:i + chunk] = model.predict_fast(x[i:i + chunk])
    rmse = float(np.sqrt(((preds.astype(np.float64) - y) ** 2).mean()))
    return rmse, preds


def naive_last_value_rmse(x: np.ndarray, y: np.ndarray) -> float:
    """Persistence baseline: predict the window's final step."""
    return float(np.sqrt(((x[:, -1, :].astype(np.float64) - y) ** 2).mean()))


# -- autoencoder training ----------------------------------------------


def train_ae(ae: AeModel, ds: TrajectoryDataset, plan: TrainPlan):
    x_train, _ = ds.windows("train")
    x_val, _ = ds.windows("val")
    flat_train = flatten_windows(x_train)
    flat_val = flatten_windows(x_val)
    cap = min(plan.val_cap, flat_val.shape[0])
    val_subset = flat_val[:cap]
    opt = Adam(ae.params(), lr=plan.lr)
    stream = _batch_stream(flat_train.shape[0], plan.batch, plan.seed)

    def step(it):
        idx = next(stream)
        xb = flat_train[idx]
        loss = ad.mse(ae.reconstruct(xb), xb)
        opt.zero_grad()
        loss.backward()
        opt.step()
        return loss.item()

    def evaluate():
        with ad.no_grad():
            total = 0.0
            count = 0
            for i in range(0, val_subset.shape[0], 512):
                xb = val_subset[i:i + 512]
                d = ae.reconstruct(xb).data - xb
                total += float((d.astype(np.float64) ** 2).sum())
                count += d.size
            return total / count

    history, its, stopped = _training_loop(step, evaluate, ae.state, ae.load_state, plan)
    return history, its, stopped


# -- predictor training -------------------------------------------------


def _train_predictor(model: PredictorModel, ds: TrajectoryDataset, plan: TrainPlan,
                     ae_for_inputs: AeModel | None):
    """Train the predictor; when ``ae_for_inputs`` is set, each minibatch
    (and evaluation input) is first round-tripped through the frozen AE."""
    x_train, y_train = ds.windows("train")
    x_val, y_val = ds.windows("val")
    if ae_for_inputs is not None:
        x_val_in = decode_windows(ae_for_inputs, x_val)
    else:
        x_val_in = x_val
    cap = min(plan.val_cap, x_val_in.shape[0])
    opt = Adam(model.params(), lr=plan.lr)
    stream = _batch_stream(x_train.shape[0], plan.batch, plan.seed)

    def step(it):
        idx = next(stream)
        xb = x_train[idx]
        if ae_for_inputs is not None:
            xb = decode_windows(ae_for_inputs, xb)
        loss = ad.mse(model.predict(xb), y_train[idx])
        opt.zero_grad()
        loss.backward()
        opt.step()
        return loss.item()

    def evaluate():
        rmse, _ = predictor_rmse(model, x_val_in[:cap], y_val[:cap])
        return rmse * rmse

    history, its, stopped = _training_loop(step, evaluate, model.state,
                                           model.load_state, plan)
    rmse, preds = predictor_rmse(model, x_val_in, y_val)
    return TrainReport(strategy=plan.strategy, rmse=rmse, iterations=its,
                       stopped_early=stopped, history=history,
                       val_predictions=preds, val_targets=y_val)


def train_baseline(predictor: PredictorModel, ds: TrajectoryDataset,
                   plan: TrainPlan) -> TrainReport:
    t0 = time.perf_counter()
    report = _train_predictor(predictor, ds, plan, ae_for_inputs=None)
    report.wall_clock_s = time.perf_counter() - t0
    return report


def train_independent(ae: AeModel, predictor: PredictorModel,
                      ds: TrajectoryDataset, plan: TrainPlan) -> TrainReport:
    """AE on reconstruction, predictor on raw windows; evaluation feeds
    the predictor AE-reconstructed windows."""
    t0 = time.perf_counter()
    train_ae(ae, ds, plan)
    report = _train_predictor(predictor, ds, plan, ae_for_inputs=None)
    x_val, y_val = ds.windows("val")
    rmse, preds = predictor_rmse(predictor, decode_windows(ae, x_val), y_val)
    report.rmse = rmse
    report.val_predictions = preds
    report.wall_clock_s = time.perf_counter() - t0
    return report


def train_compression_aware(ae: AeModel, predictor: PredictorModel,
                            ds: TrajectoryDataset, plan: TrainPlan) -> TrainReport:
    """Requires a trained AE; its weights are bit-frozen for the whole run."""
    t0 = time.perf_counter()
    frozen = digest(ae.state())
    report = _train_predictor(predictor, ds, plan, ae_for_inputs=ae)
    if digest(ae.state()) != frozen:
        raise RuntimeError("frozen-AE contract violated: AE weights changed")
    report.wall_clock_s = time.perf_counter() - t0
    return report


def train_e2e(ae: AeModel, predictor: PredictorModel, ds: TrajectoryDataset,
              plan: TrainPlan) -> TrainReport:
    """Joint training: alpha * reconstruction MSE + (1-alpha) * prediction MSE."""
    t0 = time.perf_counter()
    alpha = plan.alpha
    x_train, y_train = ds.windows("train")
    x_val, y_val = ds.windows("val")
    n_ap = x_train.shape[2]
    cap = min(plan.val_cap, x_val.shape[0])
    params = {**ae.params(), **predictor.params()}
    opt = Adam(params, lr=plan.lr)
    stream = _batch_stream(x_train.shape[0], plan.batch, plan.seed)

    def joint_forward(xb):
        flat = flatten_windows(xb)
        rec = ae.reconstruct(flat)
        loss_rec = ad.mse(rec, flat)
        rec_windows = ad.transpose(
            ad.reshape(rec, (xb.shape[0], n_ap, xb.shape[1])), (0, 2, 1))
        pred = predictor.predict(rec_windows)
        return loss_rec, pred

    def step(it):
        idx = next(stream)
        loss_rec, pred = joint_forward(x_train[idx])
        loss = loss_rec * alpha + ad.mse(pred, y_train[idx]) * (1.0 - alpha)
        opt.zero_grad()
        loss.backward()
        try:
            opt.step()
        except FloatingPointError as e:
            raise DivergenceError(
                f"joint training diverged (conflicting reconstruction/prediction "
                f"gradients): {e}"
            ) from e
        return loss.item()

    def evaluate():
        rmse, _ = predictor_rmse_through_ae(ae, predictor, x_val[:cap], y_val[:cap])
        return rmse * rmse

    def snapshot():
        return {**ae.state(), **predictor.state()}

    def restore(state):
        ae.load_state({k: v for k, v in state.items() if k.startswith("ae.")})
        predictor.load_state({k: v for k, v in state.items() if k.startswith("pred.")})

    history, its, stopped = _training_loop(step, evaluate, snapshot, restore, plan)
    rmse, preds = predictor_rmse_through_ae(ae, predictor, x_val, y_val)
    report = TrainReport(strategy=plan.strategy, rmse=rmse, iterations=its,
                         stopped_early=stopped, history=history,
                         val_predictions=preds, val_targets=y_val)
    report.wall_clock_s = time.perf_counter() - t0
    return report


def predictor_rmse_through_ae(ae: AeModel, predictor: PredictorModel,
                              x: np.ndarray, y: np.ndarray):
    rmse, preds = predictor_rmse(predictor, decode_windows(ae, x), y)
    return rmse, preds


def run_strategy(strategy: str, ds: TrajectoryDataset, plan: TrainPlan,
                 ae: AeModel | None, predictor: PredictorModel):
    """Dispatch a strategy; returns (ae, predictor, report)."""
    if strategy == "baseline-no-ae":
        return None, predictor, train_baseline(predictor, ds, plan)
    if ae is None:
        raise ValueError(f"strategy {strategy!r} needs an autoencoder")
    if strategy == "independent":
        return ae, predictor, train_independent(ae, predictor, ds, plan)
    if strategy == "compression-aware":
        return ae, predictor, train_compression_aware(ae, predictor, ds, plan)
    if strategy == "end-to-end":
        return ae, predictor, train_e2e(ae, predictor, ds, plan)
    raise ValueError(f"unknown strategy {strategy!r}")
