"""Minimum-distance-to-mean classification on the SPD manifold.

Training estimates one geometric mean per class from the trials' feature
matrices; classification assigns a trial to the class whose mean is
nearest in the affine-invariant distance.  The same machinery works for
any feature recipe, which is what makes the classifier universal across
modalities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ContractError, MeanConvergenceError
from .features import FeatureRecipe, featurize
from .preprocessing import Epoch
from .spd import SpdMatrix, geometric_mean, riemann_distance


@dataclass(frozen=True)
class MeanConfig:
    """Geometric-mean solver settings; tol=None means 1e-8 * dim."""

    tol: float | None = None
    max_iter: int = 1500


@dataclass(frozen=True, eq=False)
class DistanceVector:
    """Per-class distances, ordered like the model's class ids."""

    values: np.ndarray
    class_ids: tuple[int, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (len(self.class_ids),):
            raise ContractError(
                f"{v.shape} distances for {len(self.class_ids)} classes"
            )
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise ContractError("distances must be finite and nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def argmin_class(self) -> int:
        """Class id with the smallest distance; ties go to the lowest id."""
        return self.class_ids[int(np.argmin(self.values))]


@dataclass(frozen=True, eq=False)
class MdmModel:
    """Per-class geometric means plus the recipe that produced them."""

    class_ids: tuple[int, ...]
    means: tuple[SpdMatrix, ...]
    recipe: FeatureRecipe
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.class_ids) < 2:
            raise ContractError(
                f"MDM requires >= 2 classes (got {len(self.class_ids)})"
            )
        if len(self.means) != len(self.class_ids) or len(self.counts) != len(
            self.class_ids
        ):
            raise ContractError("class_ids, means and counts must align")
        if list(self.class_ids) != sorted(self.class_ids):
            raise ContractError("class ids must be sorted ascending")
        dim = self.means[0].dim
        for m in self.means:
            if m.dim != dim:
                raise ContractError("all class means must share one dimension")

    @property
    def dim(self) -> int:
        return self.means[0].dim


def fit(
    training: list[Epoch],
    recipe: FeatureRecipe,
    mean_cfg: MeanConfig = MeanConfig(),
) -> MdmModel:
    """Estimate per-class geometric means from labeled training epochs."""
    by_class: dict[int, list[Epoch]] = {}
    for e in training:
        if e.label is None:
            continue
        by_class.setdefault(e.label, []).append(e)
    class_ids = sorted(by_class)
    if len(class_ids) < 2:
        raise ContractError(f"MDM requires >= 2 classes (got {len(class_ids)})")
    for z in class_ids:
        if len(by_class[z]) < 2:
            raise ContractError(
                f"class {z} has {len(by_class[z])} epochs, need >= 2"
            )
    means = []
    counts = []
    for z in class_ids:
        feats = [featurize(e, recipe) for e in by_class[z]]
        try:
            means.append(
                geometric_mean(feats, tol=mean_cfg.tol, max_iter=mean_cfg.max_iter)
            )
        except MeanConvergenceError as exc:
            raise MeanConvergenceError(
                exc.residual, exc.iterations, context=f"class {z}"
            ) from exc
        counts.append(len(feats))
    return MdmModel(
        class_ids=tuple(class_ids),
        means=tuple(means),
        recipe=recipe,
        counts=tuple(counts),
    )


def distances(model: MdmModel, e: Epoch) -> DistanceVector:
    """Affine-invariant distance from the epoch's feature matrix to each mean."""
    feat = featurize(e, model.recipe)
    values = np.array([riemann_distance(m, feat) for m in model.means])
    return DistanceVector(values=values, class_ids=model.class_ids)


def predict(model: MdmModel, e: Epoch) -> int:
    """Nearest-mean class id; ties break toward the lowest id."""
    return distances(model, e).argmin_class()


def soft_scores(dv: DistanceVector) -> np.ndarray:
    """Self-normalizing pseudo-probabilities from a distance vector.

    p_z is proportional to exp(-d_z^2 / tau) with tau the mean squared
    distance, so the scores sum to one and argmax(p) always coincides with
    argmin(d).  Equal distances map to the uniform distribution.
    """
    sq = dv.values**2
    tau = float(np.mean(sq))
    if tau == 0.0:
        return np.full(len(sq), 1.0 / len(sq))
    logits = -(sq - sq.min()) / tau
    weights = np.exp(logits)
    return weights / weights.sum()


def _two_class_ids(
    model: MdmModel, target_class: int | None, nontarget_class: int | None
) -> tuple[int, int]:
    if target_class is None or nontarget_class is None:
        if len(model.class_ids) != 2:
            raise ContractError(
                "target/non-target classes must be given for a "
                f"{len(model.class_ids)}-class model"
            )
        lo, hi = model.class_ids
        target_class = hi if target_class is None else target_class
        nontarget_class = lo if nontarget_class is None else nontarget_class
    if target_class not in model.class_ids or nontarget_class not in model.class_ids:
        raise ContractError("target/non-target ids must be model classes")
    return target_class, nontarget_class


def cumulative_select(
    model: MdmModel,
    repetitions: list[dict],
    target_class: int | None = None,
    nontarget_class: int | None = None,
):
    """Pick the item whose cumulated distance contrast is most target-like.

    Each repetition maps item id -> epoch, covering the same item set.  For
    every item the per-repetition contrast d(target mean) - d(non-target
    mean) is summed over repetitions; the item with the smallest sum wins,
    ties breaking toward the lowest item id.  By default (two-class model)
    the higher class id is the target.
    """
    if not repetitions:
        raise ContractError("need at least one repetition")
    target_class, nontarget_class = _two_class_ids(
        model, target_class, nontarget_class
    )
    items = sorted(repetitions[0])
    scores = {item: 0.0 for item in items}
    ti = model.class_ids.index(target_class)
    ni = model.class_ids.index(nontarget_class)
    for rep in repetitions:
        if sorted(rep) != items:
            raise ContractError("every repetition must cover the same item set")
        for item in items:
            dv = distances(model, rep[item])
            scores[item] += dv.values[ti] - dv.values[ni]
    return min(items, key=lambda item: (scores[item], item))


def auc(scores: list[tuple[float, int]]) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic, ties at 0.5."""
    values = np.array([s for s, _ in scores], dtype=float)
    labels = np.array([int(bool(lab)) for _, lab in scores])
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ContractError("AUC needs both a positive and a negative example")
    ranks = rankdata(values)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
