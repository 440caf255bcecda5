"""Modality-specific covariance features built from epochs.

Every classifier in this package consumes one structured SPD matrix per
trial.  What that matrix looks like depends on the modality:

* motor imagery: the plain spatial sample covariance;
* ERP / P300: the covariance of a super-trial, the trial stacked under
  per-class temporal prototypes, whose cross blocks carry the temporal
  correlation between trial and prototype;
* SSVEP: a block-diagonal matrix of per-frequency-band covariances;
* multi-user P300: the covariance of all subjects' trials stacked under
  one shared prototype, including the inter-subject cross blocks.

Super-trial covariances are rank-deficient whenever the stacked dimension
exceeds the sample count, so shrinkage toward a scaled identity is applied
to guarantee positive definiteness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NotPositiveDefiniteError
from .preprocessing import (
    Epoch,
    SSVEP_BAND_ORDER,
    SSVEP_BAND_WIDTH_HZ,
    ssvep_filter_bank,
)
from .spd import SpdMatrix, SymmetricMatrix

MI = "mi"
ERP_MULTI = "erp_multi"
P300 = "p300"
SSVEP = "ssvep"
MU_P300 = "mu_p300"
MODALITIES = (MI, ERP_MULTI, P300, SSVEP, MU_P300)

AUTO_SHRINKAGE_LADDER = (1e-8, 1e-6, 1e-4, 1e-2, 1e-1)

# Recommended fixed shrinkage for ERP super-trial features: the minimal
# 'auto' floor leaves condition numbers near 1e8, which the geometric-mean
# iteration pays for dearly; 1e-2 keeps features well conditioned without
# measurably hurting classification.
DEFAULT_ERP_SHRINKAGE = 1e-2


@dataclass(frozen=True, eq=False)
class Prototype:
    """Grand-average ERP of one class: the temporal template rows of a super-trial."""

    data: np.ndarray
    class_id: int
    n_epochs: int

    def __post_init__(self):
        a = np.array(self.data, dtype=np.float64)
        if a.ndim != 2:
            raise ContractError(f"prototype must be 2-D, got shape {a.shape}")
        a.flags.writeable = False
        object.__setattr__(self, "data", a)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class FeatureRecipe:
    """Which feature matrix to build, and everything needed to build it."""

    modality: str
    prototypes: tuple[Prototype, ...] = ()
    freqs: tuple[float, ...] = ()
    width_hz: float = SSVEP_BAND_WIDTH_HZ
    order: int = SSVEP_BAND_ORDER
    shrinkage: float | str = "auto"
    n_subjects: int = 1

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ContractError(f"unknown modality {self.modality!r}")
        object.__setattr__(self, "prototypes", tuple(self.prototypes))
        object.__setattr__(self, "freqs", tuple(float(f) for f in self.freqs))
        _validate_shrinkage(self.shrinkage)
        if self.modality in (ERP_MULTI, P300, MU_P300) and not self.prototypes:
            raise ContractError(f"modality {self.modality!r} requires prototypes")
        if self.modality in (P300, MU_P300) and len(self.prototypes) != 1:
            raise ContractError(
                f"modality {self.modality!r} takes exactly one target prototype"
            )
        if self.modality == SSVEP and not self.freqs:
            raise ContractError("ssvep modality requires flicker frequencies")
        if self.modality == MU_P300 and self.n_subjects < 1:
            raise ContractError(f"n_subjects must be >= 1, got {self.n_subjects}")


def _validate_shrinkage(gamma) -> None:
    if gamma == "auto":
        return
    if not isinstance(gamma, (int, float)) or not 0.0 <= float(gamma) <= 1.0:
        raise ContractError(f"shrinkage must be in [0, 1] or 'auto', got {gamma!r}")


def shrink(c: SymmetricMatrix | np.ndarray, gamma: float | str) -> SpdMatrix:
    """Blend toward the scaled identity: (1 - g) C + g (trace(C)/dim) I.

    ``gamma='auto'`` picks the smallest value from the ladder
    (1e-8, 1e-6, 1e-4, 1e-2, 1e-1) that yields a matrix passing the SPD
    check; gamma=0 returns C unchanged (C must already be SPD).
    """
    values = c.values if isinstance(c, SymmetricMatrix) else np.asarray(c, float)
    if gamma == "auto":
        last_error = None
        for g in AUTO_SHRINKAGE_LADDER:
            try:
                return shrink(values, g)
            except NotPositiveDefiniteError as exc:
                last_error = exc
        raise NotPositiveDefiniteError(
            "no shrinkage level in the auto ladder produced a positive-definite "
            "matrix (is the input identically zero?)"
        ) from last_error
    _validate_shrinkage(gamma)
    gamma = float(gamma)
    if gamma == 0.0:
        return SpdMatrix(values)
    target = np.trace(values) / values.shape[0]
    return SpdMatrix(
        (1.0 - gamma) * values + gamma * target * np.eye(values.shape[0])
    )


def _raw_cov(x: np.ndarray) -> np.ndarray:
    """X X^T / (T - 1), symmetrized; shared by every feature builder."""
    t = x.shape[1]
    c = x @ x.T / (t - 1)
    return 0.5 * (c + c.T)


def _stacked_cov(rows: list[np.ndarray]) -> np.ndarray:
    """Covariance of vertically stacked row groups, built block by block.

    Each (i, j) block is rows[i] @ rows[j].T so that the diagonal blocks are
    bit-identical to the blocks' standalone sample covariances.
    """
    t = rows[0].shape[1]
    n = len(rows)
    blocks: list[list[np.ndarray | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            blocks[i][j] = rows[i] @ rows[j].T
            if j < i:
                blocks[j][i] = blocks[i][j].T
    c = np.block(blocks) / (t - 1)
    return 0.5 * (c + c.T)


def sample_covariance(e: Epoch, shrinkage: float | str = 0.0) -> SpdMatrix:
    """Spatial sample covariance X X^T / (T - 1) of a zero-mean trial."""
    if e.n_samples < 2:
        raise ContractError("sample covariance needs at least 2 samples")
    return shrink(_raw_cov(e.data), shrinkage)


def build_prototypes(
    training: list[Epoch], class_ids: list[int] | None = None
) -> list[Prototype]:
    """Element-wise mean epoch per class, in ascending class-id order."""
    labeled = [e for e in training if e.label is not None]
    if not labeled:
        raise ContractError("no labeled epochs to build prototypes from")
    shape = labeled[0].data.shape
    for e in labeled:
        if e.data.shape != shape:
            raise ContractError(
                f"epoch shape {e.data.shape} differs from {shape}"
            )
    available = sorted({e.label for e in labeled})
    wanted = available if class_ids is None else sorted(class_ids)
    protos = []
    for z in wanted:
        members = [e.data for e in labeled if e.label == z]
        if not members:
            raise ContractError(f"no training epochs for class {z}")
        protos.append(
            Prototype(
                data=np.mean(members, axis=0), class_id=z, n_epochs=len(members)
            )
        )
    return protos


def _check_proto_dims(e: Epoch, protos: tuple[Prototype, ...] | list[Prototype]):
    for p in protos:
        if p.data.shape != e.data.shape:
            raise ContractError(
                f"prototype for class {p.class_id} has shape {p.data.shape}, "
                f"epoch has {e.data.shape}"
            )


def erp_super_cov(
    e: Epoch,
    protos: list[Prototype],
    shrinkage: float | str = "auto",
) -> SpdMatrix:
    """Covariance of the (Z+1)N x T super-trial [prototypes; trial].

    Prototype blocks come first in ascending class-id order, the trial
    block last.  The prototype blocks are constant across trials; the
    cross blocks carry the trial-to-prototype temporal covariance that
    actually discriminates ERP classes.
    """
    if not protos:
        raise ContractError("erp super-trial requires at least one prototype")
    ordered = sorted(protos, key=lambda p: p.class_id)
    _check_proto_dims(e, ordered)
    stacked_protos = np.vstack([p.data for p in ordered])
    return shrink(_stacked_cov([stacked_protos, e.data]), shrinkage)


def p300_super_cov(
    e: Epoch,
    target_proto: Prototype,
    shrinkage: float | str = "auto",
) -> SpdMatrix:
    """Two-class P300 special case: 2N x 2N covariance of [target prototype; trial]."""
    _check_proto_dims(e, [target_proto])
    return shrink(_stacked_cov([target_proto.data, e.data]), shrinkage)


def ssvep_block_cov(
    bank: list[Epoch],
    shrinkage: float | str = "auto",
) -> SpdMatrix:
    """Block-diagonal NF x NF covariance over a filter-bank output.

    Diagonal blocks are the per-band sample covariances (shrinkage applied
    per block); off-diagonal blocks are exactly zero.
    """
    if not bank:
        raise ContractError("ssvep feature requires a nonempty filter bank")
    n = bank[0].n_channels
    t = bank[0].n_samples
    for b in bank:
        if b.n_channels != n or b.n_samples != t:
            raise ContractError("filter-bank epochs must share channel/sample counts")
    if t < 2:
        raise ContractError("sample covariance needs at least 2 samples")
    raw_blocks = [_raw_cov(b.data) for b in bank]
    if shrinkage == "auto":
        # One ladder level for all bands: the smallest gamma that makes the
        # assembled matrix positive definite, so weak bands get a floor
        # commensurate with the global eigenvalue check.
        last_error = None
        for g in AUTO_SHRINKAGE_LADDER:
            try:
                return _assemble_block_diag(raw_blocks, g)
            except NotPositiveDefiniteError as exc:
                last_error = exc
        raise NotPositiveDefiniteError(
            "no shrinkage level in the auto ladder made the block-diagonal "
            "matrix positive definite"
        ) from last_error
    return _assemble_block_diag(raw_blocks, shrinkage)


def _assemble_block_diag(raw_blocks: list[np.ndarray], gamma) -> SpdMatrix:
    n = raw_blocks[0].shape[0]
    f = len(raw_blocks)
    out = np.zeros((n * f, n * f))
    for i, raw in enumerate(raw_blocks):
        out[i * n : (i + 1) * n, i * n : (i + 1) * n] = shrink(raw, gamma).values
    return SpdMatrix(out)


def mu_p300_super_cov(
    epochs: list[Epoch],
    target_proto: Prototype,
    shrinkage: float | str = "auto",
) -> SpdMatrix:
    """(M+1)N x (M+1)N covariance of [prototype; subject 1; ...; subject M].

    One shared temporal prototype serves all subjects.  Besides each
    subject's prototype cross block, the result contains the inter-subject
    blocks X_i X_j^T, which are large only when the synchronized response
    is present in both subjects' trials.
    """
    if not epochs:
        raise ContractError("multi-user feature requires at least one epoch")
    shape = epochs[0].data.shape
    for e in epochs:
        if e.data.shape != shape:
            raise ContractError(
                f"subject epochs must be time-aligned: {e.data.shape} vs {shape}"
            )
    if target_proto.data.shape != shape:
        raise ContractError(
            f"prototype shape {target_proto.data.shape} does not match trials {shape}"
        )
    rows = [target_proto.data] + [e.data for e in epochs]
    return shrink(_stacked_cov(rows), shrinkage)


def build_recipe(
    modality: str,
    training: list[Epoch] | None = None,
    shrinkage: float | str = "auto",
    freqs: tuple[float, ...] = (),
    width_hz: float = SSVEP_BAND_WIDTH_HZ,
    order: int = SSVEP_BAND_ORDER,
    n_subjects: int = 1,
) -> FeatureRecipe:
    """Assemble a recipe, deriving prototypes from labeled epochs as needed.

    ERP modalities take their temporal prototypes from the training grand
    averages; the two-class P300 forms use only the higher class id (the
    target) as prototype.
    """
    prototypes: tuple[Prototype, ...] = ()
    if modality == ERP_MULTI:
        if not training:
            raise ContractError("erp_multi recipe needs labeled training epochs")
        prototypes = tuple(build_prototypes(training))
    elif modality in (P300, MU_P300):
        if not training:
            raise ContractError(f"{modality} recipe needs labeled training epochs")
        labels = sorted({e.label for e in training if e.label is not None})
        if len(labels) < 2:
            raise ContractError("two-class recipe needs both classes in training")
        prototypes = tuple(build_prototypes(training, class_ids=[labels[-1]]))
    return FeatureRecipe(
        modality=modality,
        prototypes=prototypes,
        freqs=freqs,
        width_hz=width_hz,
        order=order,
        shrinkage=shrinkage,
        n_subjects=n_subjects,
    )


def featurize(e: Epoch, recipe: FeatureRecipe) -> SpdMatrix:
    """Build the recipe's feature matrix for one (preprocessed) epoch."""
    if recipe.modality == MI:
        return sample_covariance(e, recipe.shrinkage)
    if recipe.modality == ERP_MULTI:
        return erp_super_cov(e, list(recipe.prototypes), recipe.shrinkage)
    if recipe.modality == P300:
        return p300_super_cov(e, recipe.prototypes[0], recipe.shrinkage)
    if recipe.modality == SSVEP:
        bank = ssvep_filter_bank(
            e, list(recipe.freqs), width_hz=recipe.width_hz, order=recipe.order
        )
        return ssvep_block_cov(bank, recipe.shrinkage)
    if recipe.modality == MU_P300:
        proto = recipe.prototypes[0]
        n = proto.n_channels
        m = recipe.n_subjects
        if e.n_channels != m * n:
            raise ContractError(
                f"multi-user epoch needs {m} x {n} stacked channels, "
                f"got {e.n_channels}"
            )
        subs = [
            Epoch(e.data[i * n : (i + 1) * n], fs=e.fs, label=e.label)
            for i in range(m)
        ]
        return mu_p300_super_cov(subs, proto, recipe.shrinkage)
    raise ContractError(f"unknown modality {recipe.modality!r}")


def feature_dim(recipe: FeatureRecipe, n_channels: int) -> int:
    """Side length of the feature matrix the recipe produces."""
    if recipe.modality == MI:
        return n_channels
    if recipe.modality == ERP_MULTI:
        return n_channels * (len(recipe.prototypes) + 1)
    if recipe.modality == P300:
        return 2 * n_channels
    if recipe.modality == SSVEP:
        return n_channels * len(recipe.freqs)
    if recipe.modality == MU_P300:
        return (recipe.n_subjects + 1) * recipe.prototypes[0].n_channels
    raise ContractError(f"unknown modality {recipe.modality!r}")
