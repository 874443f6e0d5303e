"""Cross-validated comparison of a k-NN learner with and without oversampling."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .augment import run_ldao
from .core import Dataset, RunConfig, StandardizationParams, ValidationError, derive_rng, worker_count
from .ingest import dataset_checksum
from .kernels import knn_indices
from .metrics import TooFewPairs, build_relevance, mae, rmse, sera, wilcoxon_signed_rank

METHODS = ("baseline", "ldao")
METRICS = ("rmse", "mae", "sera")
# keeps fold-split streams apart from the LDAO seeds derived per fold
_SPLIT_STREAM = 1 << 21


class KTooLarge(ValidationError):
    pass


def knn_regress(train: Dataset, query_features, k: int = 5) -> np.ndarray:
    """Mean target of the ``k`` nearest training rows.

    Features are z-scored with training statistics only. Distance ties are
    broken by training row order.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > train.n_rows:
        raise KTooLarge(f"k={k} exceeds {train.n_rows} training rows")
    Q = np.array(query_features, dtype=np.float64, ndmin=2)
    if Q.shape[1] != train.n_features:
        raise ValidationError("query feature count differs from training data")
    scaler = StandardizationParams.fit(train.features)
    idx = knn_indices(scaler.forward(train.features), scaler.forward(Q), k)
    return train.target[idx].mean(axis=1)


@dataclass(frozen=True)
class CvPlan:
    runs: int = 5
    folds: int = 5
    seed: int = 42

    def __post_init__(self):
        if self.runs < 1 or self.folds < 2:
            raise ValidationError("need runs >= 1 and folds >= 2")

    def splits(self, n: int) -> list[list[np.ndarray]]:
        """Test-row indices per run and fold; each run partitions ``range(n)``."""
        out = []
        for r in range(self.runs):
            perm = derive_rng(self.seed, _SPLIT_STREAM, r).permutation(n)
            out.append([np.sort(part) for part in np.array_split(perm, self.folds)])
        return out


@dataclass(frozen=True)
class FoldRecord:
    run: int
    fold: int
    method: str
    rmse: float
    mae: float
    sera: float


@dataclass
class EvaluationReport:
    records: list[FoldRecord]
    alpha_level: float = 0.05
    verdicts: dict = field(default_factory=dict)

    def values(self, method: str, metric: str) -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.records if r.method == method])

    def aggregate(self) -> dict[str, dict[str, float]]:
        out = {}
        for m in METHODS:
            for metric in METRICS:
                v = self.values(m, metric)
                out.setdefault(m, {})[f"{metric}_mean"] = float(v.mean())
                out[m][f"{metric}_median"] = float(np.median(v))
        return out

    def records_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run", "fold", "method", "rmse", "mae", "sera"])
        for r in self.records:
            w.writerow([r.run, r.fold, r.method, repr(r.rmse), repr(r.mae), repr(r.sera)])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"records = {len(self.records)}", f"alpha_level = {self.alpha_level!r}"]
        for m, stats in self.aggregate().items():
            lines += [f"{m}.{k} = {v!r}" for k, v in stats.items()]
        for metric in METRICS:
            v = self.verdicts[metric]
            lines.append(f"wilcoxon.{metric}.p_value = {v['p_value']!r}")
            lines.append(f"wilcoxon.{metric}.statistic = {v['statistic']!r}")
            lines.append(f"wilcoxon.{metric}.winner = {v['winner']}")
            lines.append(f"wilcoxon.{metric}.verdict = {v['verdict']}")
        return "\n".join(lines) + "\n"


def compare_methods(ldao_losses, baseline_losses, alpha_level: float = 0.05) -> dict:
    """Wilcoxon verdict on paired per-fold losses (lower is better).

    ``winner`` is the side with the smaller signed-rank sum whether or not
    the difference is significant; ``verdict`` names a winner only when
    ``p < alpha_level``.
    """
    try:
        res = wilcoxon_signed_rank(ldao_losses, baseline_losses, alpha=alpha_level)
    except TooFewPairs:
        return {"p_value": 1.0, "statistic": float("nan"), "significant": False,
                "winner": "none", "verdict": "no significant difference (too few non-zero pairs)"}
    winner = {"a": "ldao", "b": "baseline", None: "none"}[res.winner]
    if res.significant and res.winner is not None:
        verdict = "ldao better" if res.winner == "a" else "baseline better"
    else:
        verdict = "no significant difference"
    return {"p_value": res.p_value, "statistic": res.statistic,
            "significant": res.significant, "winner": winner, "verdict": verdict}


def _evaluate_fold(dataset, test_idx, run, fold, config, learner_k):
    mask = np.ones(dataset.n_rows, dtype=bool)
    mask[test_idx] = False
    train = dataset.take(np.flatnonzero(mask))
    test = dataset.take(test_idx)
    before = dataset_checksum(test)
    phi = build_relevance(train.target)
    fold_cfg = config.with_(seed=int(derive_rng(config.seed, run, fold).integers(2**63)))
    augmented = run_ldao(train, fold_cfg, workers=1).dataset
    out = []
    for method, fit_on in (("baseline", train), ("ldao", augmented)):
        pred = knn_regress(fit_on, test.features, min(learner_k, fit_on.n_rows))
        out.append(FoldRecord(run, fold, method, rmse(test.target, pred),
                              mae(test.target, pred), sera(test.target, pred, phi)))
    if dataset_checksum(test) != before:
        raise AssertionError("test rows changed during evaluation")
    return out


def run_experiment(dataset: Dataset, plan: CvPlan | None = None, config: RunConfig | None = None,
                   learner_k: int = 5, alpha_level: float = 0.05,
                   workers: int | None = 1) -> EvaluationReport:
    """Repeated k-fold CV of k-NN trained on raw vs. oversampled training folds.

    Oversampling, feature scaling and the relevance function for SERA see
    only the training rows of each fold.
    """
    plan = plan or CvPlan()
    config = config or RunConfig()
    if dataset.n_rows < plan.folds * 2:
        raise ValidationError(f"{dataset.n_rows} rows is too few for {plan.folds} folds")
    jobs = [(r, f, idx) for r, run in enumerate(plan.splits(dataset.n_rows))
            for f, idx in enumerate(run)]

    def job(item):
        r, f, idx = item
        return _evaluate_fold(dataset, idx, r, f, config, learner_k)

    nw = min(worker_count(workers), len(jobs))
    if nw > 1:
        with ThreadPoolExecutor(nw) as ex:
            results = list(ex.map(job, jobs))
    else:
        results = [job(j) for j in jobs]
    records = [rec for recs in results for rec in recs]
    report = EvaluationReport(records=records, alpha_level=alpha_level)
    for metric in METRICS:
        report.verdicts[metric] = compare_methods(report.values("ldao", metric),
                                                  report.values("baseline", metric), alpha_level)
    return report
