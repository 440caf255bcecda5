"""Epoch and model file formats plus synthetic data generators.

Epoch file layout (bit-exact across platforms):
    line 1   UTF-8 JSON header terminated by a newline, with keys
             version, n_trials, n_channels, n_samples, fs_hz,
             channel_names, labels (one int per trial, -1 = unlabeled)
             and modality;
    rest     raw payload of n_trials * n_channels * n_samples IEEE
             float32 values, little endian, trial-major then
             channel-major (C order).

Model files are single JSON documents holding the recipe, class ids,
per-class training counts, and the class means as row-major float64
decimal arrays; reading one back reproduces the model exactly.

The generators realize a zero-mean Gaussian data model: each motor-imagery
class is a draw from N(0, Sigma_z); P300 targets are a fixed temporal
template plus AR(1)-colored, spatially mixed noise; SSVEP classes are
flicker-frequency sinusoids (plus a half-amplitude harmonic) mixed over
channel gain profiles.  All generators are pure functions of (spec, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, FileFormatError
from .features import FeatureRecipe, Prototype
from .preprocessing import Epoch
from .spd import SpdMatrix

FILE_VERSION = 1

# Frozen by a one-off sweep over the default P300 geometry (8 channels,
# 1 s at 128 Hz, 50 trials per class, shrinkage 1e-2): mean held-out AUC
# over seeds 0..19 lands at 0.908.  See scripts/calibrate_p300_snr.py.
DEFAULT_P300_SNR = 0.9


# ---------------------------------------------------------------------------
# epoch files


def write_epochs(path, epochs: list[Epoch], modality: str = "raw") -> None:
    """Write epochs to ``path``; lossless round trip at float32 precision."""
    path = Path(path)
    if epochs:
        n = epochs[0].n_channels
        t = epochs[0].n_samples
        fs = epochs[0].fs
        names = epochs[0].channels
        for e in epochs:
            if e.n_channels != n or e.n_samples != t or e.fs != fs:
                raise ContractError("all epochs in a file must share shape and fs")
        labels = [(-1 if e.label is None else int(e.label)) for e in epochs]
        payload = np.stack([e.data for e in epochs]).astype("<f4").tobytes()
    else:
        n = t = 0
        fs = 0.0
        names = ()
        labels = []
        payload = b""
    header = {
        "version": FILE_VERSION,
        "n_trials": len(epochs),
        "n_channels": n,
        "n_samples": t,
        "fs_hz": fs,
        "channel_names": list(names),
        "labels": labels,
        "modality": modality,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def read_epochs(path) -> list[Epoch]:
    """Read an epoch file; parse errors name the offending field."""
    blob = Path(path).read_bytes()
    newline = blob.find(b"\n")
    if newline < 0:
        raise FileFormatError("missing header line")
    try:
        header = json.loads(blob[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"unparseable header: {exc}") from exc
    for key in (
        "version",
        "n_trials",
        "n_channels",
        "n_samples",
        "fs_hz",
        "channel_names",
        "labels",
        "modality",
    ):
        if key not in header:
            raise FileFormatError(f"header missing field '{key}'")
    n_trials = header["n_trials"]
    n = header["n_channels"]
    t = header["n_samples"]
    if len(header["labels"]) != n_trials:
        raise FileFormatError(
            f"field 'labels' has {len(header['labels'])} entries "
            f"for n_trials={n_trials}"
        )
    if n_trials == 0:
        return []
    if len(header["channel_names"]) != n:
        raise FileFormatError(
            f"field 'channel_names' has {len(header['channel_names'])} entries "
            f"for n_channels={n}"
        )
    payload = blob[newline + 1 :]
    expected = n_trials * n * t * 4
    if len(payload) != expected:
        raise FileFormatError(
            f"payload holds {len(payload)} bytes, header implies {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n_trials, n, t)
    channels = tuple(header["channel_names"])
    return [
        Epoch(
            data=data[i].astype(np.float64),
            fs=float(header["fs_hz"]),
            label=None if header["labels"][i] == -1 else int(header["labels"][i]),
            channels=channels,
        )
        for i in range(n_trials)
    ]


# ---------------------------------------------------------------------------
# model files


def _recipe_to_doc(recipe: FeatureRecipe) -> dict:
    return {
        "modality": recipe.modality,
        "prototypes": [
            {
                "class_id": p.class_id,
                "n_epochs": p.n_epochs,
                "data": p.data.tolist(),
            }
            for p in recipe.prototypes
        ],
        "freqs": list(recipe.freqs),
        "width_hz": recipe.width_hz,
        "order": recipe.order,
        "shrinkage": recipe.shrinkage,
        "n_subjects": recipe.n_subjects,
    }


def _recipe_from_doc(doc: dict) -> FeatureRecipe:
    return FeatureRecipe(
        modality=doc["modality"],
        prototypes=tuple(
            Prototype(
                data=np.asarray(p["data"], dtype=np.float64),
                class_id=int(p["class_id"]),
                n_epochs=int(p["n_epochs"]),
            )
            for p in doc["prototypes"]
        ),
        freqs=tuple(doc["freqs"]),
        width_hz=float(doc["width_hz"]),
        order=int(doc["order"]),
        shrinkage=doc["shrinkage"],
        n_subjects=int(doc["n_subjects"]),
    )


def model_to_doc(model) -> dict:
    return {
        "format": "mdm-model",
        "version": FILE_VERSION,
        "class_ids": list(model.class_ids),
        "counts": list(model.counts),
        "recipe": _recipe_to_doc(model.recipe),
        "means": [m.values.tolist() for m in model.means],
    }


def model_from_doc(doc: dict):
    from .mdm import MdmModel

    for key in ("format", "class_ids", "counts", "recipe", "means"):
        if key not in doc:
            raise FileFormatError(f"model document missing field '{key}'")
    if doc["format"] != "mdm-model":
        raise FileFormatError(f"unexpected document format {doc['format']!r}")
    return MdmModel(
        class_ids=tuple(int(z) for z in doc["class_ids"]),
        means=tuple(SpdMatrix(np.asarray(m, dtype=np.float64)) for m in doc["means"]),
        recipe=_recipe_from_doc(doc["recipe"]),
        counts=tuple(int(c) for c in doc["counts"]),
    )


def save_model(path, model) -> None:
    Path(path).write_text(json.dumps(model_to_doc(model), sort_keys=True))


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"unparseable model document: {exc}") from exc
    return model_from_doc(doc)


def save_fused(path, fused) -> None:
    """Persist a fused classifier: generic model, individual means/counts,
    repetition credit and ramp.  Batch-mode feature history is not
    persisted; a reloaded batch-mode classifier refits from new data only."""
    doc = {
        "format": "fused-classifier",
        "version": FILE_VERSION,
        "generic": model_to_doc(fused.generic),
        "n_rep": fused.n_rep,
        "ramp": fused.ramp,
        "update": fused.update,
        "individual_means": {
            str(z): m.values.tolist() for z, m in fused.individual_means.items()
        },
        "individual_counts": {
            str(z): c for z, c in fused.individual_counts.items()
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def load_fused(path):
    from .adaptive import FusedClassifier

    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"unparseable classifier document: {exc}") from exc
    if doc.get("format") != "fused-classifier":
        raise FileFormatError(f"unexpected document format {doc.get('format')!r}")
    fused = FusedClassifier(
        generic=model_from_doc(doc["generic"]),
        ramp=int(doc["ramp"]),
        update=doc["update"],
    )
    fused.n_rep = float(doc["n_rep"])
    for z, values in doc["individual_means"].items():
        fused.individual_means[int(z)] = SpdMatrix(
            np.asarray(values, dtype=np.float64)
        )
    fused.individual_counts.update(
        {int(z): int(c) for z, c in doc["individual_counts"].items()}
    )
    return fused


# ---------------------------------------------------------------------------
# synthetic generators


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the zero-mean Gaussian generators, one modality at a time.

    ``class_covs`` drives the motor-imagery mode; ``snr`` the P300 and SSVEP
    modes (snr = 0 is the null model: targets are indistinguishable noise).
    """

    n_channels: int = 8
    n_samples: int = 128
    fs: float = 128.0
    trials_per_class: int = 50
    seed: int = 0
    class_covs: tuple[np.ndarray, ...] = ()
    snr: float = DEFAULT_P300_SNR
    latency_s: float = 0.30
    latency_jitter_s: float = 0.05
    amp_jitter: float = 0.5
    background_erp: float = 0.5
    gain_center: float = 0.60
    ar_coeff: float = 0.95
    freqs: tuple[float, ...] = (12.0, 15.0, 20.0)
    include_rest: bool = True

    def __post_init__(self):
        if self.snr < 0:
            raise ContractError(f"snr must be >= 0, got {self.snr}")
        if self.trials_per_class < 1:
            raise ContractError("trials_per_class must be >= 1")


def default_mi_covariances(n_channels: int, n_classes: int) -> tuple[np.ndarray, ...]:
    """Class 0 is isotropic; class z boosts the variance of channel z-1 by 4."""
    if n_classes < 2:
        raise ContractError("need at least 2 classes")
    if n_classes - 1 > n_channels:
        raise ContractError(
            f"{n_classes} classes need at least {n_classes - 1} channels"
        )
    covs = [np.eye(n_channels)]
    for z in range(1, n_classes):
        d = np.ones(n_channels)
        d[z - 1] = 4.0
        covs.append(np.diag(d))
    return tuple(covs)


def generate_mi(spec: SyntheticSpec) -> list[Epoch]:
    """Labeled trials X = Sigma_z^(1/2) W with W standard normal, per class."""
    if not spec.class_covs:
        raise ContractError("mi generation requires class_covs")
    roots = []
    for sigma in spec.class_covs:
        spd = SpdMatrix(sigma)  # raises if a class covariance is not SPD
        roots.append(spd._sqrt_array())
    rng = np.random.default_rng(spec.seed)
    epochs = []
    for z, root in enumerate(roots):
        for _ in range(spec.trials_per_class):
            w = rng.standard_normal((spec.n_channels, spec.n_samples))
            epochs.append(Epoch(root @ w, fs=spec.fs, label=z))
    return epochs


def _p300_response(spec: SyntheticSpec, latency: float) -> np.ndarray:
    """Unnormalized evoked response: a late positive bump over posterior
    channels preceded by a smaller negative deflection, zero mean per row."""
    n, t = spec.n_channels, spec.n_samples
    time = np.arange(t) / spec.fs
    bump = np.exp(-0.5 * ((time - latency) / 0.06) ** 2)
    dip = -0.4 * np.exp(-0.5 * ((time - (latency - 0.10)) / 0.04) ** 2)
    course = bump + dip
    positions = np.linspace(0.0, 1.0, n)
    gains = np.exp(-0.5 * ((positions - spec.gain_center) / 0.25) ** 2)
    response = gains[:, None] * course[None, :]
    return response - response.mean(axis=1, keepdims=True)


def p300_template(spec: SyntheticSpec) -> np.ndarray:
    """Deterministic ground-truth target template at nominal latency, unit RMS."""
    nominal = _p300_response(spec, spec.latency_s)
    return nominal / np.sqrt(np.mean(nominal**2))


def _mixing(n: int) -> np.ndarray:
    """Fixed channel-mixing matrix with unit-norm rows (volume conduction)."""
    rng = np.random.default_rng(1234 + n)
    w = np.eye(n) + 0.5 * rng.standard_normal((n, n))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def _colored_noise(rng, n: int, t: int, ar: float, mixing: np.ndarray) -> np.ndarray:
    """AR(1)-filtered Gaussian sources mixed across channels, unit variance."""
    innovations = rng.standard_normal((n, t)) * np.sqrt(1.0 - ar**2)
    sources = np.empty((n, t))
    sources[:, 0] = rng.standard_normal(n)
    for i in range(1, t):
        sources[:, i] = ar * sources[:, i - 1] + innovations[:, i]
    return mixing @ sources


def p300_trial(
    rng, spec: SyntheticSpec, is_target: bool,
    mixing: np.ndarray | None = None,
) -> Epoch:
    """One synthetic flash epoch.

    Every trial carries colored noise plus an ERP-shaped background
    fluctuation of random sign and size; target trials add the snr-scaled
    evoked response on top, with per-trial lognormal amplitude and Gaussian
    latency jitter.  The background keeps the template direction populated
    in both classes, which is what makes single-trial detection a graded
    problem instead of a separable one.
    """
    if mixing is None:
        mixing = _mixing(spec.n_channels)
    noise = _colored_noise(rng, spec.n_channels, spec.n_samples, spec.ar_coeff, mixing)
    scale = np.sqrt(np.mean(_p300_response(spec, spec.latency_s) ** 2))
    bg_amp = rng.normal(0.0, spec.background_erp)
    bg_latency = spec.latency_s + rng.normal(0.0, spec.latency_jitter_s)
    data = noise + bg_amp * _p300_response(spec, bg_latency) / scale
    if is_target:
        amp = spec.snr * np.exp(rng.normal(0.0, spec.amp_jitter))
        latency = spec.latency_s + rng.normal(0.0, spec.latency_jitter_s)
        data = data + amp * _p300_response(spec, latency) / scale
    return Epoch(data, fs=spec.fs, label=1 if is_target else 0)


def generate_p300(spec: SyntheticSpec) -> tuple[list[Epoch], np.ndarray]:
    """Target (label 1) and non-target (label 0) epochs plus the template."""
    template = p300_template(spec)
    mixing = _mixing(spec.n_channels)
    rng = np.random.default_rng(spec.seed)
    epochs = []
    for _ in range(spec.trials_per_class):
        epochs.append(p300_trial(rng, spec, True, mixing))
    for _ in range(spec.trials_per_class):
        epochs.append(p300_trial(rng, spec, False, mixing))
    return epochs, template


def ssvep_gains(n_channels: int, n_freqs: int) -> np.ndarray:
    """Per-frequency channel gain profiles, overlapping but distinct."""
    positions = np.linspace(0.0, 1.0, n_channels)
    centers = np.linspace(0.25, 0.75, n_freqs)
    return np.stack(
        [np.exp(-0.5 * ((positions - c) / 0.3) ** 2) for c in centers]
    )


def generate_ssvep(spec: SyntheticSpec) -> list[Epoch]:
    """Labeled SSVEP epochs: label 0 is rest (noise only) when included,
    then one class per flicker frequency with a half-amplitude harmonic."""
    for f in spec.freqs:
        if 2.0 * f >= spec.fs / 2.0:
            raise ContractError(
                f"flicker frequency {f} Hz needs its harmonic below Nyquist"
            )
    gains = ssvep_gains(spec.n_channels, len(spec.freqs))
    mixing = _mixing(spec.n_channels)
    rng = np.random.default_rng(spec.seed)
    time = np.arange(spec.n_samples) / spec.fs
    epochs = []
    labels = ([0] if spec.include_rest else []) + [
        i + 1 for i in range(len(spec.freqs))
    ]
    for label in labels:
        for _ in range(spec.trials_per_class):
            noise = mixing @ rng.standard_normal((spec.n_channels, spec.n_samples))
            if label == 0:
                data = noise
            else:
                f = spec.freqs[label - 1]
                phase = rng.uniform(0.0, 2.0 * np.pi)
                wave = np.sin(2 * np.pi * f * time + phase) + 0.5 * np.sin(
                    2 * np.pi * 2 * f * time + 2 * phase
                )
                data = spec.snr * gains[label - 1][:, None] * wave[None, :] + noise
            epochs.append(Epoch(data, fs=spec.fs, label=label))
    return epochs
