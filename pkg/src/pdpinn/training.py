"""Empirical losses, Adam, and the training loop with metric logging."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import diffgraph as dg
from .diffgraph import Jet2, ParamStore
from .dictionaries import DictionarySpec, eval_dictionary, fuse, lift_sphere
from .network import MlpConfig, init_mlp, mlp_forward
from .problems import ProblemSpec, apply_operator, boundary_value, ground_truth, rhs
from .sampling import SampleBatch, sample_boundary, sample_interior

DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    """Training loss exploded; carries the iteration and loss values."""


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def init(n_params: int, lr: float = 0.001) -> "AdamState":
        return AdamState(m=np.zeros(n_params), v=np.zeros(n_params), lr=lr)


@dataclass
class TrainRecord:
    iteration: int
    loss_pde: float
    loss_bc: float
    error_predict: float
    elapsed: float


@dataclass
class TrainSettings:
    """Knobs of one training run; defaults follow the benchmark setups."""

    hidden_layers: int = 3
    hidden_width: int = 50
    iterations: int | None = None        # None: use the problem default
    n_pde: int | None = None
    n_bc: int | None = None
    n_pred: int = 1000
    seed: int = 0
    eval_seed: int = 777                 # fixed, separate from training noise
    learning_rate: float = 0.001
    record_every: int = 10
    deterministic: bool = True
    fresh_batches: bool = True           # False: fixed collocation ablation


# --------------------------------------------------------------------------
# Predictor assembly
# --------------------------------------------------------------------------

def network_input_dim(p: ProblemSpec, lift: bool) -> int:
    return 3 if lift else p.dim


def net_input_jet(p: ProblemSpec, points: np.ndarray, lift: bool) -> Jet2:
    """Jets of the network input at sample points.

    With lifting enabled the (theta, phi) coordinates are mapped to the
    unit sphere first; derivatives stay with respect to (theta, phi).
    """
    x = Jet2.seed(points)
    if not lift:
        return x
    if p.id != "sphere":
        raise ValueError("lifting applies only to the sphere problem")
    return lift_sphere(x.component(0), x.component(1))


def predictor_jets(layers, p: ProblemSpec, dspec: DictionarySpec,
                   points: np.ndarray, lift: bool):
    """Fused predictor jets at points.

    ``layers`` as in ``mlp_forward``; pass Parameter leaves to record the
    tape.  With no dictionary the network's single output is the predictor,
    bit for bit.
    """
    x = net_input_jet(p, points, lift)
    traced = hasattr(layers[0][0], "arr")
    if traced:
        x = dg.trace_input(x)
    net = mlp_forward(layers, x)
    if dspec.kind == "none":
        if traced:
            return _traced_single_output(net)
        return net.component(0)
    words = eval_dictionary(dspec, points)
    return fuse(words, net)


def _traced_single_output(net: dg.TracedJet) -> dg.TracedJet:
    out = net.aug[:, 0, :]

    def bw(o):
        acc = np.zeros_like(net.aug)
        acc[:, 0, :] = o._grad()
        net._bump(acc)
    return dg.TracedJet(out, net.dim, (net,), bw, "select-output")


def predict_values(store: ParamStore, p: ProblemSpec, dspec: DictionarySpec,
                   points: np.ndarray, lift: bool) -> np.ndarray:
    F = predictor_jets(store.layers, p, dspec, points, lift)
    return F.value


# --------------------------------------------------------------------------
# Empirical losses
# --------------------------------------------------------------------------

def _traced_predictor(store, p, dspec, points, lift):
    leaves = dg.wrap_params(store)
    F = predictor_jets(leaves, p, dspec, points, lift)
    return leaves, F


def _blame_point(e: dg.NonFiniteError, points: np.ndarray) -> dg.NonFiniteError:
    """Attach the first offending sample point to an engine error."""
    bad = np.nonzero(~np.all(np.isfinite(points), axis=1))[0]
    where = points[bad[0]] if bad.size else points[0]
    return dg.NonFiniteError(f"{e}; batch point {np.array2string(where)}")


def empirical_pde_loss(store: ParamStore, p: ProblemSpec, dspec: DictionarySpec,
                       batch: SampleBatch, lift: bool = False):
    """Mean squared PDE residual over an interior batch, with gradient."""
    if batch.region != "interior":
        raise ValueError("PDE loss needs an interior batch")
    try:
        leaves, F = _traced_predictor(store, p, dspec, batch.points, lift)
        r = apply_operator(p, F, batch.points) - rhs(p, batch.points)
        loss = (r * r).mean()
    except dg.NonFiniteError as e:
        raise _blame_point(e, batch.points) from None
    grad = dg.loss_parameter_gradient(loss, leaves)
    return float(loss.arr), grad


def empirical_bc_loss(store: ParamStore, p: ProblemSpec, dspec: DictionarySpec,
                      batch: SampleBatch, lift: bool = False):
    """Mean squared boundary mismatch over a boundary batch, with gradient."""
    if batch.region != "boundary":
        raise ValueError("BC loss needs a boundary batch")
    try:
        leaves, F = _traced_predictor(store, p, dspec, batch.points, lift)
        m = F.value_arr() - boundary_value(p, batch.points)
        loss = (m * m).mean()
    except dg.NonFiniteError as e:
        raise _blame_point(e, batch.points) from None
    grad = dg.loss_parameter_gradient(loss, leaves)
    return float(loss.arr), grad


def predict_error(store: ParamStore, p: ProblemSpec, dspec: DictionarySpec,
                  n: int = 1000, rng: np.random.Generator | None = None,
                  lift: bool = False) -> float:
    """Monte Carlo mean squared prediction error over interior points."""
    if n < 1:
        raise ValueError("need n >= 1 prediction points")
    if rng is None:
        rng = np.random.default_rng(TrainSettings.eval_seed)
    pts = sample_interior(p, n, rng).points
    vals = predict_values(store, p, dspec, pts, lift)
    return float(np.mean((vals - ground_truth(p, pts)) ** 2))


# --------------------------------------------------------------------------
# Optimizer
# --------------------------------------------------------------------------

def adam_step(state: AdamState, store: ParamStore, grad: np.ndarray) -> None:
    """One Adam update with bias correction, in place."""
    if grad.shape != state.m.shape:
        raise ValueError("gradient length does not match the optimizer state")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    mhat = state.m / (1.0 - state.beta1 ** state.t)
    vhat = state.v / (1.0 - state.beta2 ** state.t)
    theta = store.flat()
    theta -= state.lr * mhat / (np.sqrt(vhat) + state.eps)
    store.set_flat(theta)


# --------------------------------------------------------------------------
# Training loop
# --------------------------------------------------------------------------

def train(p: ProblemSpec, dspec: DictionarySpec, settings: TrainSettings,
          store: ParamStore | None = None, lift: bool | None = None):
    """Adam on the summed empirical losses with fresh batches per iteration.

    Returns (records, store).  The objective is exactly loss_pde + loss_bc;
    the prediction error is sampled at the end of each recorded iteration
    with its own fixed-seed generator.  Raises DivergenceError when the
    loss passes DIVERGENCE_LIMIT.  Reductions over samples always run in a
    fixed order here, so every run is bit-reproducible for a given seed and
    the ``deterministic`` setting is satisfied trivially.
    """
    if lift is None:
        lift = p.lift and dspec.kind != "none"
    iterations = settings.iterations if settings.iterations is not None else p.iterations
    n_pde = settings.n_pde if settings.n_pde is not None else p.n_pde
    n_bc = settings.n_bc if settings.n_bc is not None else p.n_bc

    if store is None:
        cfg = MlpConfig(input_dim=network_input_dim(p, lift),
                        hidden_widths=(settings.hidden_width,) * settings.hidden_layers,
                        output_dim=dspec.word_count, seed=settings.seed)
        store = init_mlp(cfg)

    rng = np.random.default_rng(settings.seed + 1)
    state = AdamState.init(store.n_params, lr=settings.learning_rate)
    records: list[TrainRecord] = []
    start = time.perf_counter()

    # fixed evaluation set: same points as predict_error with the eval seed
    eval_pts = sample_interior(p, settings.n_pred,
                               np.random.default_rng(settings.eval_seed)).points
    eval_input = net_input_jet(p, eval_pts, lift)
    eval_words = (None if dspec.kind == "none"
                  else eval_dictionary(dspec, eval_pts))
    eval_truth = ground_truth(p, eval_pts)

    def current_error() -> float:
        net = mlp_forward(store.layers, eval_input)
        F = net.component(0) if eval_words is None else fuse(eval_words, net)
        return float(np.mean((F.value - eval_truth) ** 2))

    if not settings.fresh_batches:
        fixed_interior = sample_interior(p, n_pde, rng)
        fixed_boundary = sample_boundary(p, n_bc, rng)

    for it in range(1, iterations + 1):
        if settings.fresh_batches:
            interior = sample_interior(p, n_pde, rng)
            boundary = sample_boundary(p, n_bc, rng)
        else:
            interior, boundary = fixed_interior, fixed_boundary
        loss_pde, grad_pde = empirical_pde_loss(store, p, dspec, interior, lift)
        loss_bc, grad_bc = empirical_bc_loss(store, p, dspec, boundary, lift)
        total = loss_pde + loss_bc
        if not np.isfinite(total) or total > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"loss {total:.3e} at iteration {it} "
                f"(pde {loss_pde:.3e}, bc {loss_bc:.3e})")
        adam_step(state, store, grad_pde + grad_bc)
        if it % settings.record_every == 0 or it == iterations:
            err = current_error()
            records.append(TrainRecord(
                iteration=it, loss_pde=loss_pde, loss_bc=loss_bc,
                error_predict=err, elapsed=time.perf_counter() - start))
    return records, store


CSV_HEADER = "iteration,loss_pde,loss_bc,error_predict,elapsed_s"


def write_records_csv(records, path) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(f"{r.iteration},{r.loss_pde:.17g},{r.loss_bc:.17g},"
                     f"{r.error_predict:.17g},{r.elapsed:.17g}\n")


def read_records_csv(path):
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {header!r}")
        for line in fh:
            it, lp, lb, ep, el = line.strip().split(",")
            records.append(TrainRecord(int(it), float(lp), float(lb),
                                       float(ep), float(el)))
    return records
