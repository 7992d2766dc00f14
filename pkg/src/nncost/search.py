"""Hyperparameter search spaces, k-fold scoring and budgeted sweeps.

Search spaces pair named dimensions (integer ranges, categorical sets,
continuous intervals) with a JSON layer template whose ``"$name"`` strings
are replaced by decoded dimension values, yielding a NetworkSpec per point.
A complexity constraint (RM, BOP or NABS under a budget) filters candidates
before the optimizer ever scores them, so accepted trials always fit the
budget.

Scoring keeps training out of the toolkit: layer weights are fixed and
seeded, the interpreter produces the hidden representation of the input
stream, and only a linear readout is fitted per fold by ridge-regularized
least squares. This is the reservoir-computing recipe (only the readout is
trainable) applied uniformly to every layer type. The score is the negative
held-out mean squared error, averaged over folds.

The bundled synthetic task is symbol recovery through a known FIR channel:
seeded +/-1 symbols are filtered, Gaussian noise is added, and architectures
are scored on recovering the clean symbols from the received stream.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import arch, bayesopt, costmodel, interp, quant
from .arch import BitwidthConfig, NetworkSpec
from .errors import DomainError, NNCostError
from .interp import fir_filter


# ---------------------------------------------------------------------------
# Search space


@dataclass(frozen=True)
class Dimension:
    """One named search dimension: integer range, interval or category set."""

    name: str
    kind: str  # "int" | "float" | "cat"
    low: float | None = None
    high: float | None = None
    values: tuple | None = None
    log: bool = False

    def __post_init__(self):
        if self.kind not in ("int", "float", "cat"):
            raise ValueError(f"unknown dimension kind {self.kind!r}")
        if self.kind == "cat":
            if not self.values:
                raise ValueError("categorical dimension needs values")
        else:
            if self.low is None or self.high is None or self.low > self.high:
                raise ValueError("range dimension needs low <= high")
            if self.log and self.low <= 0:
                raise ValueError("log scaling needs positive low")

    def decode(self, u: float):
        """Map a unit-interval coordinate to a concrete value."""
        u = min(max(float(u), 0.0), 1.0)
        if self.kind == "cat":
            idx = min(int(u * len(self.values)), len(self.values) - 1)
            return self.values[idx]
        if self.kind == "int":
            lo, hi = int(self.low), int(self.high)
            return min(lo + int(u * (hi - lo + 1)), hi)
        if self.log:
            return float(self.low * (self.high / self.low) ** u)
        return float(self.low + u * (self.high - self.low))


def _substitute(node, params: dict):
    if isinstance(node, str) and node.startswith("$"):
        name = node[1:]
        if name not in params:
            raise DomainError(f"template references unknown dimension {name!r}")
        return params[name]
    if isinstance(node, dict):
        return {k: _substitute(v, params) for k, v in node.items()}
    if isinstance(node, list):
        return [_substitute(v, params) for v in node]
    return node


@dataclass(frozen=True)
class SearchSpace:
    """Dimensions plus a network template and an optional complexity budget."""

    dimensions: tuple
    template: dict
    metric: str = "nabs"
    budget: int | None = None
    bits: BitwidthConfig = field(default_factory=BitwidthConfig)
    scheme: quant.QuantScheme = field(default_factory=quant.FixedUniform)

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        if not self.dimensions:
            raise ValueError("search space needs at least one dimension")
        if self.metric.lower() not in ("rm", "bop", "nabs"):
            raise ValueError("metric must be one of rm, bop, nabs")

    @property
    def n_dims(self) -> int:
        return len(self.dimensions)

    def decode(self, theta) -> dict:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.n_dims:
            raise DomainError(
                f"theta has {theta.size} components, space has {self.n_dims}")
        return {dim.name: dim.decode(u)
                for dim, u in zip(self.dimensions, theta)}

    def build_network(self, theta) -> NetworkSpec:
        doc = _substitute(self.template, self.decode(theta))
        return arch.parse_spec(json.dumps(doc))

    def cost(self, theta) -> costmodel.CostReport:
        return costmodel.cost_report(self.build_network(theta), self.bits,
                                     self.scheme)

    def feasible(self, theta, budget: int | None = None) -> bool:
        """Valid network within the budget (if any); errors mean infeasible."""
        limit = self.budget if budget is None else budget
        try:
            report = self.cost(theta)
        except NNCostError:
            return False
        if limit is None:
            return True
        return report.total(self.metric) <= limit

    @staticmethod
    def from_json(doc: dict) -> "SearchSpace":
        dims = []
        for entry in doc["dimensions"]:
            dims.append(Dimension(
                name=entry["name"],
                kind=entry["kind"],
                low=entry.get("low"),
                high=entry.get("high"),
                values=tuple(entry["values"]) if "values" in entry else None,
                log=bool(entry.get("log", False)),
            ))
        constraint = doc.get("constraint", {})
        bits_doc = doc.get("bits", {})
        bits = BitwidthConfig(**bits_doc) if bits_doc else BitwidthConfig()
        scheme = parse_scheme(doc.get("scheme", "uniform"), bits.b_w)
        return SearchSpace(
            dimensions=tuple(dims),
            template=doc["template"],
            metric=constraint.get("metric", "nabs").lower(),
            budget=constraint.get("budget"),
            bits=bits,
            scheme=scheme,
        )


def parse_scheme(text: str, b_w: int) -> quant.QuantScheme:
    """Scheme from its CLI spelling: float | uniform | pot | apot:K."""
    text = text.lower()
    if text == "float":
        return quant.Float(b_w)
    if text == "uniform":
        return quant.FixedUniform(b_w)
    if text == "pot":
        return quant.PoT(b_w)
    if text.startswith("apot"):
        k = int(text.split(":", 1)[1]) if ":" in text else 2
        return quant.APoT(b_w, k)
    raise ValueError(f"unknown scheme {text!r}")


# ---------------------------------------------------------------------------
# Tasks and cross-validation


@dataclass(frozen=True)
class Task:
    """Input stream plus targets, regenerable from (params, seed)."""

    inputs: np.ndarray
    targets: np.ndarray
    params: dict
    seed: int


def synth_task_fir(taps, noise_std: float, n_samples: int, seed: int) -> Task:
    """Symbol recovery through a FIR channel with additive Gaussian noise."""
    if noise_std < 0:
        raise DomainError("noise_std must be >= 0")
    taps = list(map(float, taps))
    if not taps:
        raise DomainError("taps must be nonempty")
    rng = np.random.default_rng(seed)
    symbols = rng.integers(0, 2, size=n_samples) * 2.0 - 1.0
    received = fir_filter(taps, symbols)
    if noise_std > 0:
        received = received + noise_std * rng.standard_normal(n_samples)
    params = {"taps": taps, "noise_std": float(noise_std),
              "n_samples": int(n_samples), "seed": int(seed)}
    return Task(inputs=received, targets=symbols, params=params, seed=seed)


def task_from_json(doc: dict) -> Task:
    return synth_task_fir(doc["taps"], doc["noise_std"], doc["n_samples"],
                          doc["seed"])


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every sample index to exactly one of k folds."""

    k: int
    assignment: np.ndarray

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def kfold_split(n: int, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle then contiguous partition into folds of near-equal size."""
    if k < 2 or k > n:
        raise DomainError("fold count must satisfy 2 <= k <= n")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    base, rem = divmod(n, k)
    start = 0
    for fold in range(k):
        size = base + (1 if fold < rem else 0)
        assignment[perm[start:start + size]] = fold
        start += size
    return FoldPlan(k=k, assignment=assignment)


def _input_windows(stream: np.ndarray, width: int) -> np.ndarray:
    """Causal windows: row t holds the last ``width`` samples ending at t."""
    n = stream.size
    out = np.zeros((n, width))
    for j in range(width):
        out[j:, j] = stream[:n - j] if j else stream
    return out


def featurize(net: NetworkSpec, stream, seed: int) -> np.ndarray:
    """Hidden representation of the stream under seeded fixed weights.

    Each layer transforms the per-step feature vectors of its predecessor;
    recurrent layers run statefully over the whole stream from zero state.
    The final features come from the last layer: its per-step output, or
    the reservoir state when the last layer is an echo state network (the
    readout of a reservoir is fitted, not random).
    """
    stream = np.asarray(stream, dtype=float)
    features = _input_windows(stream, net.layers[0].n_i)
    for index, layer in enumerate(net.layers):
        weights = interp.random_weights(
            layer, np.random.default_rng([seed, index]))
        last = index == len(net.layers) - 1
        if isinstance(layer, arch.Dense):
            rows = [interp.forward_dense(layer, weights, row)[0]
                    for row in features]
            features = np.stack(rows)
        elif isinstance(layer, arch.Conv1D):
            n = features.shape[0]
            padded = np.vstack([np.zeros((layer.n_s - 1, layer.n_i)),
                                features])
            rows = []
            for t in range(n):
                window = padded[t:t + layer.n_s]
                maps, _ = interp.forward_conv1d(layer, weights, window)
                rows.append(maps.reshape(-1))
            features = np.stack(rows)
        elif isinstance(layer, arch.EchoState):
            trace: list = []
            y_seq, _, _ = interp.forward_esn(layer, weights, features,
                                             state_trace=trace)
            features = np.stack(trace) if last else y_seq
        else:
            forward = interp._RECURRENT_FORWARD[type(layer)]
            features, _, _ = forward(layer, weights, features)
    return features


def _ridge_fit(F: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    Fb = np.hstack([F, np.ones((F.shape[0], 1))])
    gram = Fb.T @ Fb + ridge * np.eye(Fb.shape[1])
    return np.linalg.solve(gram, Fb.T @ y)


def _ridge_predict(F: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return np.hstack([F, np.ones((F.shape[0], 1))]) @ beta


def kfold_score(task: Task, net: NetworkSpec, k: int = 5, seed: int = 0,
                ridge: float = 1e-6) -> float:
    """Mean held-out score (negative MSE) over a seeded k-fold plan.

    Features are computed once on the full stream (they depend only on the
    inputs); the readout is refitted per fold and every sample is tested
    exactly once.
    """
    features = featurize(net, task.inputs, seed)
    plan = kfold_split(task.targets.size, k, seed)
    mses = []
    for fold in range(k):
        train = plan.train_indices(fold)
        test = plan.test_indices(fold)
        beta = _ridge_fit(features[train], task.targets[train], ridge)
        pred = _ridge_predict(features[test], beta)
        mses.append(float(np.mean((pred - task.targets[test]) ** 2)))
    return -float(np.mean(mses))


def evaluate_arch(task: Task, net: NetworkSpec, k: int = 5, seed: int = 0,
                  bits: BitwidthConfig | None = None,
                  scheme: quant.QuantScheme | None = None) -> bayesopt.Trial:
    """Score an architecture and bundle it with its cost totals."""
    bits = bits or BitwidthConfig()
    scheme = scheme or quant.FixedUniform(bits.b_w)
    score = kfold_score(task, net, k=k, seed=seed)
    report = costmodel.cost_report(net, bits, scheme)
    return bayesopt.Trial(theta=np.zeros(0), score=score,
                          cost={"rm": report.rm, "bop": report.bop,
                                "nabs": report.nabs})


# ---------------------------------------------------------------------------
# Constrained search and sweeps


def make_objective(space: SearchSpace, task: Task, k: int = 3,
                   eval_seed: int = 0):
    """Objective closure mapping a cube point to (score, cost totals)."""

    def objective(theta):
        net = space.build_network(theta)
        report = costmodel.cost_report(net, space.bits, space.scheme)
        score = kfold_score(task, net, k=k, seed=eval_seed)
        return score, {"rm": report.rm, "bop": report.bop,
                       "nabs": report.nabs}

    return objective


def search_history_csv(space: SearchSpace, history) -> str:
    """History rows: iteration, decoded theta, score, nabs, feasible flag."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = [dim.name for dim in space.dimensions]
    writer.writerow(["iteration"] + [f"theta_{n}" for n in names]
                    + ["score", "nabs", "feasible"])
    for i, trial in enumerate(history):
        params = space.decode(trial.theta)
        nabs = trial.cost.get("nabs") if trial.cost else ""
        feasible = (space.budget is None or trial.cost is None
                    or trial.cost[space.metric] <= space.budget)
        writer.writerow([i] + [params[n] for n in names]
                        + [repr(trial.score), nabs, int(feasible)])
    return buf.getvalue()


@dataclass(frozen=True)
class SweepPoint:
    budget: int
    metric: str
    best_score: float
    best_params: dict
    rm: int
    bop: int
    nabs: int


@dataclass(frozen=True)
class SweepResult:
    """Best point per budget; ``histories`` holds each budget's full trials."""

    points: tuple
    histories: tuple = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["budget", "metric", "best_score", "best_theta_json",
                         "rm", "bop", "nabs"])
        for p in self.points:
            writer.writerow([p.budget, p.metric, repr(p.best_score),
                             json.dumps(p.best_params, sort_keys=True),
                             p.rm, p.bop, p.nabs])
        return buf.getvalue()


def complexity_sweep(space: SearchSpace, task: Task, budgets, iters: int,
                     seed: int, n_init: int = 5, k: int = 3) -> SweepResult:
    """One constrained optimization per budget, cheapest budget first.

    Budget point i derives its seed as seed + i, so points are independent
    and could run concurrently. Raises InfeasibleSpace for budgets below
    the cheapest candidate architecture.
    """
    budgets = list(budgets)
    if budgets != sorted(budgets):
        raise DomainError("budgets must be sorted ascending")
    objective = make_objective(space, task, k=k, eval_seed=seed)
    points = []
    histories = []
    for i, budget in enumerate(budgets):
        budget = int(budget)

        def constraint(theta, _b=budget):
            return space.feasible(theta, budget=_b)

        best, history = bayesopt.bo_optimize(objective, space,
                                             max_iters=iters, n_init=n_init,
                                             seed=seed + i,
                                             constraint=constraint)
        histories.append(tuple(history))
        points.append(SweepPoint(
            budget=budget,
            metric=space.metric,
            best_score=best.score,
            best_params=space.decode(best.theta),
            rm=best.cost["rm"],
            bop=best.cost["bop"],
            nabs=best.cost["nabs"],
        ))
    return SweepResult(points=tuple(points), histories=tuple(histories))
