"""End-to-end oversampling: cluster, fit local KDEs, grow each cluster, merge."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cluster import ElbowTrace, select_k, sse_curve
from .core import (Dataset, RunConfig, StandardizationParams, TooFewPoints,
                   ValidationError, derive_rng, to_joint, worker_count)
from .density import CholeskyFailure, ClusterKde, sample, select_bandwidth

logger = logging.getLogger(__name__)

# stream tag separating sampling draws from k-means draws
_SAMPLE_STREAM = 1 << 20


def ceil_mul(alpha: float, n: int) -> int:
    """Exact ``ceil(alpha * n)`` using the shortest decimal repr of alpha,
    so 1.1 * 50 gives 55 rather than 56."""
    return math.ceil(Fraction(repr(float(alpha))) * int(n))


@dataclass(frozen=True)
class AugmentationPlan:
    alphas: np.ndarray
    sizes: np.ndarray
    target_sizes: np.ndarray

    @property
    def synthetic_counts(self) -> np.ndarray:
        return self.target_sizes - self.sizes


def make_plan(cluster_sizes, config: RunConfig) -> AugmentationPlan:
    """Per-cluster multipliers and target sizes ``ceil(alpha_k * n_k)``.

    Uniform mode uses ``config.alpha`` everywhere. Adaptive mode gives
    smaller clusters more growth: ``min(alpha_max, (n_max / n_k)**gamma)``,
    never below 1.
    """
    sizes = np.asarray(cluster_sizes, dtype=np.int64)
    if sizes.ndim != 1 or sizes.size == 0 or (sizes < 1).any():
        raise ValidationError("cluster sizes must be a non-empty vector of positive ints")
    if config.alpha_mode == "uniform":
        alphas = np.full(sizes.size, float(config.alpha))
    else:
        ratio = sizes.max() / sizes
        alphas = np.maximum(1.0, np.minimum(config.alpha_max, ratio ** config.gamma))
    targets = np.array([ceil_mul(a, n) for a, n in zip(alphas, sizes)], dtype=np.int64)
    return AugmentationPlan(alphas=alphas, sizes=sizes, target_sizes=targets)


@dataclass(frozen=True)
class AugmentedDataset:
    """Original rows (input order) followed by synthetic rows grouped by cluster.

    ``provenance`` holds the source cluster for every row, originals included.
    """

    dataset: Dataset
    plan: AugmentationPlan
    provenance: np.ndarray
    trace: ElbowTrace
    kdes: tuple[ClusterKde, ...]
    params: StandardizationParams
    config: RunConfig

    @property
    def k_star(self) -> int:
        return self.trace.k_star

    def report(self) -> str:
        return format_report(self)


def run_ldao(dataset: Dataset, config: RunConfig | None = None,
             workers: int | None = 1) -> AugmentedDataset:
    """Oversample ``dataset``.

    Clustering and density estimation happen in the standardized joint
    space; synthetic points are mapped back to the original units. The
    output is identical for any ``workers`` value.
    """
    config = config or RunConfig()
    config.range_warnings()
    n = dataset.n_rows
    if n < config.k_min:
        raise TooFewPoints(f"{n} rows but k_min={config.k_min}")
    k_max = min(config.k_max, n)
    if k_max < config.k_max:
        logger.warning("k_max lowered from %d to %d (only %d rows)", config.k_max, k_max, n)

    Z_raw = to_joint(dataset)
    params = StandardizationParams.fit(Z_raw)
    Z = params.forward(Z_raw)

    trace = sse_curve(Z, config.k_min, k_max, config.seed, config.restarts,
                      config.max_iterations, config.tolerance, workers=workers)
    trace.k_star = select_k(trace, config.elbow_threshold)
    model = trace.models[trace.k_star]
    K = model.k
    members = [np.flatnonzero(model.assignments == c) for c in range(K)]
    plan = make_plan([m.size for m in members], config)
    counts = plan.synthetic_counts

    def work(c):
        try:
            kde = select_bandwidth(Z[members[c]], config.bandwidth_scale, config.lambda_floor)
        except CholeskyFailure as exc:
            raise CholeskyFailure(str(exc), cluster=c) from exc
        draws = sample(kde, int(counts[c]), derive_rng(config.seed, _SAMPLE_STREAM, c))
        return kde, draws

    nw = min(worker_count(workers), K)
    if nw > 1:
        with ThreadPoolExecutor(nw) as ex:
            results = list(ex.map(work, range(K)))
    else:
        results = [work(c) for c in range(K)]

    synth = params.inverse(np.vstack([r[1] for r in results]))
    if config.clip_to_range:
        synth = np.clip(synth, Z_raw.min(axis=0), Z_raw.max(axis=0))
    out = Dataset(
        np.vstack([dataset.features, synth[:, :-1]]),
        np.concatenate([dataset.target, synth[:, -1]]),
        dataset.feature_names, dataset.target_name,
        np.concatenate([dataset.synthetic_mask, np.ones(len(synth), dtype=bool)]),
    )
    provenance = np.concatenate([model.assignments,
                                 np.repeat(np.arange(K), counts)]).astype(np.int64)
    return AugmentedDataset(dataset=out, plan=plan, provenance=provenance, trace=trace,
                            kdes=tuple(r[0] for r in results), params=params, config=config)


def format_report(result: AugmentedDataset) -> str:
    """``key = value`` lines; floats use repr so reports compare byte-for-byte."""
    tr, plan = result.trace, result.plan
    lines = [
        f"seed = {result.config.seed}",
        f"k_min = {tr.k_min}",
        f"k_max = {tr.k_max}",
        f"elbow_threshold = {result.config.elbow_threshold!r}",
        f"k_star = {tr.k_star}",
    ]
    lines += [f"sse[{k}] = {v!r}" for k, v in sorted(tr.sse_by_k.items())]
    lines += [f"delta[{k}] = {v!r}" for k, v in sorted(tr.deltas.items())]
    for c, kde in enumerate(result.kdes):
        lines += [
            f"cluster[{c}].n = {int(plan.sizes[c])}",
            f"cluster[{c}].alpha = {float(plan.alphas[c])!r}",
            f"cluster[{c}].n_prime = {int(plan.target_sizes[c])}",
            f"cluster[{c}].synthetic = {int(plan.synthetic_counts[c])}",
            f"cluster[{c}].lambda = {kde.regularization!r}",
        ]
    lines += [
        f"rows_original = {int((~result.dataset.synthetic_mask).sum())}",
        f"rows_total = {result.dataset.n_rows}",
    ]
    return "\n".join(lines) + "\n"
