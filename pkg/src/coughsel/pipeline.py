"""Training and evaluation of whole detectors, plus model files.

Stage order is fixed: ingest -> MFCC -> flatten -> PCA (train only) ->
standardize (train stats) -> selector -> linear SVM. A single seed drives
every stochastic step.
"""

from __future__ import annotations

import hashlib
import json
import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler

from . import __version__
from .audio import DatasetManifest
from .errors import CorruptModel, CoughselError, EmptyInput, SingleClass, VersionMismatch
from .features import AudioConfig, FeatureExtractor
from .metrics import compute_metrics, confusion, failed_row
from .mfcc import MfccConfig
from .pca import VariancePCA
from .selectors import RandomFrogSelector, SelectionResult, UVESelector, VIPSelector, make_selector
from .svm import LinearSVM

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
SELECTORS = ("none", "random_frog", "uve", "vip")

# Table-2 layout: PCA baseline plus every (method, k) pair
DEFAULT_SWEEP = (
    [("none", None)]
    + [("random_frog", k) for k in (10, 20, 30, 40, 50)]
    + [("uve", k) for k in (10, 20, 30, 40)]
    + [("vip", k) for k in (10, 20, 30, 40, 50)]
)


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    tol: float = 1e-4
    max_iter: int = 100_000


@dataclass
class TrainConfig:
    audio: AudioConfig = field(default_factory=AudioConfig)
    mfcc: MfccConfig = field(default_factory=MfccConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    variance_target: float = 0.95
    # per-method keyword overrides, e.g. {"random_frog": {"n_iter": 2000}}
    selector_params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"audio": asdict(self.audio), "mfcc": asdict(self.mfcc), "svm": asdict(self.svm),
                "variance_target": self.variance_target,
                "selector_params": {k: dict(v) for k, v in sorted(self.selector_params.items())}}

    @classmethod
    def from_dict(cls, d):
        return cls(audio=AudioConfig(**d.get("audio", {})), mfcc=MfccConfig(**d.get("mfcc", {})),
                   svm=SvmConfig(**d.get("svm", {})),
                   variance_target=d.get("variance_target", 0.95),
                   selector_params={k: dict(v) for k, v in d.get("selector_params", {}).items()})


@contextmanager
def _stage(name):
    try:
        yield
    except CoughselError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def encode_labels(labels):
    """'cough' -> +1, 'non-cough' -> -1."""
    return np.array([1.0 if lab == "cough" else -1.0 for lab in labels])


def manifest_digest(manifest: DatasetManifest, split="train"):
    h = hashlib.sha256()
    for e in manifest.split(split):
        h.update(f"{e.path}\t{e.label}\n".encode())
    return h.hexdigest()


@dataclass
class PipelineModel:
    """A trained detector plus everything needed to reproduce its preprocessing."""

    audio: AudioConfig
    mfcc: MfccConfig
    estimator: Pipeline
    selector: str
    k: int
    config: TrainConfig
    provenance: dict
    format_version: int = FORMAT_VERSION

    @property
    def pca(self) -> VariancePCA:
        return self.estimator.named_steps["pca"]

    @property
    def scaler(self) -> StandardScaler:
        return self.estimator.named_steps["scale"]

    @property
    def svm(self) -> LinearSVM:
        return self.estimator.named_steps["svm"]

    @property
    def selection(self) -> SelectionResult | None:
        step = self.estimator.named_steps["select"]
        return None if step == "passthrough" else step.result_

    def decision_function(self, features):
        return self.estimator.decision_function(features)

    def predict_labels(self, features):
        s = np.atleast_1d(self.decision_function(features))
        return ["cough" if v >= 0 else "non-cough" for v in s]


def _selector_estimator(method, k, seed, config: TrainConfig):
    params = dict(config.selector_params.get(method, {}))
    params.pop("k", None)
    return make_selector(method, k, random_state=seed, **params)


def _assemble(pca, scaler, selector, svm):
    return Pipeline([("pca", pca), ("scale", scaler),
                     ("select", selector if selector is not None else "passthrough"),
                     ("svm", svm)])


class _TrainState:
    """Fitted shared stages for one training split, reused across sweep runs."""

    def __init__(self, X, y, config: TrainConfig):
        self.y = y
        self.config = config
        with _stage("pca"):
            self.pca = VariancePCA(config.variance_target).fit(X)
            scores = self.pca.transform(X)
        with _stage("standardize"):
            self.scaler = StandardScaler().fit(scores)
            self.Z = self.scaler.transform(scores)
        self._selectors = {}

    def selector(self, method, k, seed):
        if method == "none":
            return None
        with _stage("select"):
            base = self._selectors.get(method)
            if base is None:
                base = _selector_estimator(method, k, seed, self.config).fit(self.Z, self.y)
                self._selectors[method] = base
            return base if base.k == k else base.with_k(k)

    def svm(self, selector):
        cfg = self.config.svm
        Zs = self.Z if selector is None else selector.transform(self.Z)
        with _stage("svm"):
            return LinearSVM(C=cfg.C, tol=cfg.tol, max_iter=cfg.max_iter).fit(Zs, self.y)


def _training_data(manifest, config, extractor):
    train = manifest.split("train")
    with _stage("ingest"):
        if not train:
            raise EmptyInput("manifest has no training entries")
        labels = [e.label for e in train]
        if len(set(labels)) < 2:
            raise SingleClass("training split needs both cough and non-cough clips")
    with _stage("mfcc"):
        X = extractor.features([manifest.resolve(e) for e in train], [e.path for e in train])
    return X, encode_labels(labels)


def _extractor(config, extractor):
    if extractor is None:
        return FeatureExtractor(config.audio, config.mfcc)
    if extractor.audio != config.audio or extractor.mfcc != config.mfcc:
        raise ValueError("feature extractor configuration differs from the training config")
    return extractor


def _build_model(state, manifest, method, k, seed):
    selector = state.selector(method, k, seed)
    svm = state.svm(selector)
    k_eff = state.pca.n_components_ if selector is None else k
    provenance = {"seed": int(seed), "manifest_digest": manifest_digest(manifest),
                  "n_train": int(state.Z.shape[0]), "package_version": __version__}
    return PipelineModel(state.config.audio, state.config.mfcc,
                         _assemble(state.pca, state.scaler, selector, svm),
                         method, int(k_eff), state.config, provenance)


def train_pipeline(manifest: DatasetManifest, selector="none", k=None, config=None, seed=0,
                   extractor=None) -> PipelineModel:
    """Train one detector on the manifest's training split.

    ``selector`` is one of ``none``, ``random_frog``, ``uve``, ``vip``; ``k``
    is required unless it is ``none``. Errors carry the failing stage in
    their ``stage`` attribute.
    """
    config = config or TrainConfig()
    if selector == "frog":
        selector = "random_frog"
    if selector not in SELECTORS:
        raise ValueError(f"unknown selector {selector!r}")
    if selector != "none" and k is None:
        raise ValueError("k is required when a selector is used")
    extractor = _extractor(config, extractor)
    X, y = _training_data(manifest, config, extractor)
    state = _TrainState(X, y, config)
    return _build_model(state, manifest, selector, k, seed)


def evaluate_pipeline(model: PipelineModel, manifest: DatasetManifest, split="test", extractor=None):
    """Predict every clip in ``split``; returns ``(ConfusionMatrix, MetricsRow)``."""
    entries = manifest.split(split)
    if not entries:
        raise EmptyInput(f"split {split!r} is empty")
    extractor = _extractor(model.config, extractor)
    X = extractor.features([manifest.resolve(e) for e in entries], [e.path for e in entries])
    pred = model.predict_labels(X)
    cm = confusion(pred, [e.label for e in entries])
    method = "pca" if model.selector == "none" else model.selector
    return cm, compute_metrics(cm, method, model.k)


def predict_clip(model: PipelineModel, wav_path):
    """Return ``(label, decision value)`` for one WAV file."""
    extractor = FeatureExtractor(model.audio, model.mfcc)
    x = extractor.features([wav_path])
    score = float(model.decision_function(x)[0])
    return ("cough" if score >= 0 else "non-cough"), score


def sweep(manifest, configs=DEFAULT_SWEEP, config=None, seed=0, extractor=None, models_out=None):
    """Train and test every ``(selector, k)`` pair on one fixed split.

    Features and the PCA/standardization stages are fitted once; each selector
    runs once and serves all of its k values. Failed runs become report rows
    carrying the error. Returns ``(rows, models)``.
    """
    config = config or TrainConfig()
    extractor = _extractor(config, extractor)
    X, y = _training_data(manifest, config, extractor)
    state = _TrainState(X, y, config)
    test = manifest.split("test")
    if not test:
        raise EmptyInput("split 'test' is empty")
    X_test = extractor.features([manifest.resolve(e) for e in test], [e.path for e in test])
    truth = [e.label for e in test]

    rows, models = [], {}
    for method, k in configs:
        name = "pca" if method == "none" else method
        try:
            model = _build_model(state, manifest, method, k, seed)
        except CoughselError as exc:
            log.warning("run %s k=%s failed in stage %s: %s", name, k, exc.stage, exc)
            rows.append(failed_row(name, k or 0, f"{exc.stage}: {exc}"))
            continue
        cm = confusion(model.predict_labels(X_test), truth)
        rows.append(compute_metrics(cm, name, model.k))
        models[(method, k)] = model
        if models_out is not None:
            Path(models_out).mkdir(parents=True, exist_ok=True)
            save_model(model, Path(models_out) / f"{name}_{model.k}.json")
    return rows, models


# persistence ---------------------------------------------------------------

def _arr(a):
    return np.asarray(a, dtype=np.float64).tolist()


def model_to_dict(model: PipelineModel):
    pca, scaler, svm = model.pca, model.scaler, model.svm
    sel = model.selection
    return {
        "format_version": model.format_version,
        "audio": asdict(model.audio),
        "mfcc": asdict(model.mfcc),
        "config": model.config.to_dict(),
        "selector": model.selector,
        "k": model.k,
        "pca": {
            "variance_target": pca.variance_target,
            "n_components": int(pca.n_components_),
            "mean": _arr(pca.mean_),
            "components": _arr(pca.components_),
            "eigenvalues": _arr(pca.eigenvalues_),
        },
        "scaler": {"mean": _arr(scaler.mean_), "scale": _arr(scaler.scale_),
                   "var": _arr(scaler.var_), "n_samples_seen": int(scaler.n_samples_seen_)},
        "selection": None if sel is None else sel.to_dict(),
        "svm": {"C": svm.C, "tol": svm.tol, "max_iter": svm.max_iter,
                "w": _arr(svm.coef_), "b": float(svm.intercept_),
                "support": [int(i) for i in svm.support_],
                "objective": float(svm.objective_), "n_iter": int(svm.n_iter_),
                "kkt_gap": float(svm.kkt_gap_)},
        "provenance": model.provenance,
    }


def _restore_selector(method, sel, config: TrainConfig, seed, p):
    result = SelectionResult.from_dict(sel)
    params = dict(config.selector_params.get(method, {}))
    params.pop("k", None)
    cls = {"uve": UVESelector, "vip": VIPSelector, "random_frog": RandomFrogSelector}[method]
    if method != "vip":
        params["random_state"] = seed
    est = cls(k=len(result.selected), **params)
    est.n_features_in_ = p
    est.importance_ = result.importance
    est.result_ = result
    if method == "uve":
        est.noise_cutoff_ = result.notes.get("noise_cutoff", 0.0)
    return est


def model_from_dict(d) -> PipelineModel:
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format_version {version!r}, expected {FORMAT_VERSION}")
    try:
        config = TrainConfig.from_dict(d["config"])
        audio = AudioConfig(**d["audio"])
        mfcc = MfccConfig(**d["mfcc"])
        pd_ = d["pca"]
        pca = VariancePCA(pd_["variance_target"])
        pca.mean_ = np.asarray(pd_["mean"], dtype=np.float64)
        pca.components_ = np.asarray(pd_["components"], dtype=np.float64).reshape(
            pd_["n_components"], pca.mean_.shape[0])
        pca.eigenvalues_ = np.asarray(pd_["eigenvalues"], dtype=np.float64)
        pca.n_components_ = int(pd_["n_components"])
        pca.n_features_in_ = pca.mean_.shape[0]
        pca.explained_variance_ratio_ = pca.eigenvalues_[:pca.n_components_] / pca.eigenvalues_.sum()

        sd = d["scaler"]
        scaler = StandardScaler()
        scaler.mean_ = np.asarray(sd["mean"], dtype=np.float64)
        scaler.scale_ = np.asarray(sd["scale"], dtype=np.float64)
        scaler.var_ = np.asarray(sd["var"], dtype=np.float64)
        scaler.n_samples_seen_ = sd["n_samples_seen"]
        scaler.n_features_in_ = pca.n_components_

        seed = d["provenance"]["seed"]
        selector = None
        if d["selection"] is not None:
            selector = _restore_selector(d["selector"], d["selection"], config, seed,
                                         pca.n_components_)

        vd = d["svm"]
        svm = LinearSVM(C=vd["C"], tol=vd["tol"], max_iter=vd["max_iter"])
        svm.coef_ = np.asarray(vd["w"], dtype=np.float64)
        svm.intercept_ = float(vd["b"])
        svm.support_ = np.asarray(vd["support"], dtype=int)
        svm.objective_ = vd["objective"]
        svm.n_iter_ = vd["n_iter"]
        svm.kkt_gap_ = vd["kkt_gap"]
        svm.classes_ = np.array([-1, 1])
        svm.n_features_in_ = svm.coef_.shape[0]

        expected = pca.n_components_ if selector is None else len(selector.result_.selected)
        if svm.coef_.shape[0] != expected:
            raise CorruptModel(f"SVM has {svm.coef_.shape[0]} weights, expected {expected}")
        if selector is not None and not all(0 <= i < pca.n_components_
                                            for i in selector.result_.selected):
            raise CorruptModel("selected indices exceed the PCA dimension")
        return PipelineModel(audio, mfcc, _assemble(pca, scaler, selector, svm),
                             d["selector"], int(d["k"]), config, dict(d["provenance"]),
                             int(version))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CoughselError):
            raise
        raise CorruptModel(f"model document does not match the schema: {exc!r}") from exc


def dumps_model(model: PipelineModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":")) + "\n"


def save_model(model: PipelineModel, path):
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> PipelineModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(d, dict):
        raise CorruptModel(f"{path}: top level must be an object")
    return model_from_dict(d)
