"""Experiment stages: synth, extract, train, calibrate, evaluate, predict.

Each stage reads and writes plain files so the CLI can run them one at a
time. Fitting only ever sees rows of the training split.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from gearline import bundle as bundle_io
from gearline.config import RunConfig
from gearline.dataset_io import DatasetError, Manifest, load_manifest, read_wav, validate_measurement
from gearline.evaluation import (
    ACCEPT_GOOD,
    ACCEPT_GOOD_WARNING,
    HIGHER_IS_BETTER,
    LabeledScore,
    ThresholdPair,
    best_and_delta,
    classify,
    classify_many,
    extract_thresholds,
    metrics,
    roc,
)
from gearline.features.base import FeatureVector, concat
from gearline.features.envelope import les_ff, les_limited, log_envelope_spectrum
from gearline.features.psycho import pa_features
from gearline.features.spectral import log_envelope_spectrogram_features, log_mel_features
from gearline.kinematics import fault_frequency_set
from gearline.occ import fit_occ, model_from_state
from gearline.preprocessing import fit_pca, fit_robust_scaler, PcaModel, RobustScalerModel
from gearline.signals import TimeSignal, bandpass
from gearline.synth import DISTURBANCE_KINDS, generate_dataset

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("feature_set", "model", "seed", "AUC_g", "AUC_w", "MF_v", "MF_t", "PF_t", "Acc")
BREAKDOWN_CONDITIONS = ("none",) + DISTURBANCE_KINDS


class PipelineError(ValueError):
    pass


# -- features --------------------------------------------------------------------


def extract_features(signal: TimeSignal, cfg: RunConfig) -> FeatureVector:
    """Band-pass the record, then compute the configured feature family."""
    filtered = bandpass(signal, cfg.band)
    kind = cfg.feature_set
    if kind == "les_limited":
        return les_limited(log_envelope_spectrum(filtered, cfg.band, prefiltered=True))
    if kind == "lms_pca":
        return log_mel_features(filtered, cfg.train, f_lo=cfg.band.low_hz, f_hi=cfg.band.high_hz)
    if kind == "les_spectral":
        return log_envelope_spectrogram_features(filtered, cfg.train, cfg.band)
    if kind == "pa":
        return pa_features(filtered, cfg.modulation)
    ffv = les_ff(log_envelope_spectrum(filtered, cfg.band, prefiltered=True), fault_frequency_set(cfg.train), cfg.les_ff_tol)
    if kind == "les_ff":
        return ffv
    # PALFF: the scaler works column by column, so scaling the concatenation
    # equals concatenating the separately scaled parts
    return concat(pa_features(filtered, cfg.modulation), ffv)


@dataclass(frozen=True)
class FeatureStore:
    paths: tuple[str, ...]
    names: tuple[str, ...]
    values: np.ndarray

    def rows(self, paths) -> np.ndarray:
        index = {p: i for i, p in enumerate(self.paths)}
        try:
            return self.values[[index[p] for p in paths]]
        except KeyError as exc:
            raise PipelineError(f"feature store has no row for {exc}") from None


def write_feature_store(store: FeatureStore, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("path",) + store.names)
    for p, row in zip(store.paths, store.values):
        w.writerow([p] + [repr(float(v)) for v in row])
    Path(path).write_text(buf.getvalue())


def read_feature_store(path) -> FeatureStore:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][0] != "path":
        raise PipelineError(f"{path}: not a feature store")
    names = tuple(rows[0][1:])
    paths = tuple(r[0] for r in rows[1:])
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float).reshape(len(paths), len(names))
    return FeatureStore(paths, names, values)


def _extract_one(args):
    path, cfg = args
    sig = read_wav(path)
    try:
        validate_measurement(sig, strict=cfg.strict_io)
    except DatasetError as exc:
        raise DatasetError(f"{path}: {exc}") from None
    return extract_features(sig, cfg)


def cmd_extract(manifest: Manifest | str | Path, cfg: RunConfig, out_path=None, jobs: int = 1) -> FeatureStore:
    if not isinstance(manifest, Manifest):
        manifest = load_manifest(manifest)
    tasks = [(manifest.resolve(r), cfg) for r in manifest.records]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            vectors = list(pool.map(_extract_one, tasks))
    else:
        vectors = [_extract_one(t) for t in tasks]
    names = vectors[0].names
    for rec, v in zip(manifest.records, vectors):
        if v.names != names:
            raise PipelineError(f"{rec.path}: {len(v)} features, first record has {len(names)}")
    store = FeatureStore(tuple(r.path for r in manifest.records), names, np.vstack([v.values for v in vectors]))
    if out_path is not None:
        write_feature_store(store, out_path)
    return store


# -- preprocessing ---------------------------------------------------------------


@dataclass(frozen=True)
class Preprocessor:
    kind: str
    model: RobustScalerModel | PcaModel | None

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X if self.model is None else self.model.transform(X)

    def to_state(self) -> dict[str, np.ndarray]:
        if self.kind == "scaler":
            return {"medians": self.model.medians, "half_iqrs": self.model.half_iqrs}
        if self.kind == "pca":
            return {
                "mean": self.model.mean,
                "components": self.model.components,
                "explained": self.model.explained_variance_fracs,
            }
        return {}

    @classmethod
    def from_state(cls, kind: str, arrays) -> "Preprocessor":
        if kind == "scaler":
            return cls(kind, RobustScalerModel(arrays["medians"], arrays["half_iqrs"]))
        if kind == "pca":
            return cls(kind, PcaModel(arrays["mean"], arrays["components"], arrays["explained"]))
        return cls("none", None)


def fit_preprocessor(kind: str, X, variance_target: float) -> Preprocessor:
    if kind == "scaler":
        return Preprocessor(kind, fit_robust_scaler(X))
    if kind == "pca":
        return Preprocessor(kind, fit_pca(X, variance_target))
    return Preprocessor("none", None)


# -- bundles --------------------------------------------------------------------


@dataclass
class Bundle:
    config: RunConfig
    config_hash: str
    feature_names: tuple[str, ...]
    preprocessor: Preprocessor
    runs: list[str]
    models: list
    thresholds: list[ThresholdPair] | None = None
    selected: int | None = None

    @property
    def calibrated(self) -> bool:
        return self.thresholds is not None

    def features_to_space(self, X) -> np.ndarray:
        return self.preprocessor.transform(X)

    def scores(self, X) -> np.ndarray:
        """Similarity of each row under each model, shape (models, rows)."""
        Z = self.features_to_space(X)
        return np.vstack([m.score_samples(Z) for m in self.models])


def save_bundle(b: Bundle, path) -> None:
    header = {
        "format": "gearline-model",
        "config": b.config.to_dict(),
        "config_hash": b.config_hash,
        "feature_names": list(b.feature_names),
        "preprocessor": b.preprocessor.kind,
        "models": [],
        "thresholds": None if b.thresholds is None else [[t.t_e, t.t_w] for t in b.thresholds],
        "selected": b.selected,
    }
    arrays = {f"pre/{k}": v for k, v in b.preprocessor.to_state().items()}
    for k, (run, model) in enumerate(zip(b.runs, b.models)):
        meta, state = model.to_state()
        header["models"].append({"run": run, "kind": model.kind, "meta": meta})
        arrays.update({f"model{k:02d}/{name}": v for name, v in state.items()})
    bundle_io.write_bundle(path, header, arrays)


def load_bundle(path, cfg: RunConfig | None = None) -> Bundle:
    header, arrays = bundle_io.read_bundle(path)
    if header.get("format") != "gearline-model":
        raise PipelineError(f"{path}: not a model bundle")
    stored = RunConfig.from_dict(header["config"])
    if stored.model_hash() != header["config_hash"]:
        raise PipelineError(f"{path}: stored config does not match its hash")
    if cfg is not None and cfg.model_hash() != header["config_hash"]:
        raise PipelineError(f"{path}: bundle was trained with a different configuration")
    pre = Preprocessor.from_state(header["preprocessor"], {k[4:]: v for k, v in arrays.items() if k.startswith("pre/")})
    models, runs = [], []
    for k, entry in enumerate(header["models"]):
        prefix = f"model{k:02d}/"
        state = {name[len(prefix) :]: v for name, v in arrays.items() if name.startswith(prefix)}
        models.append(model_from_state(entry["kind"], entry["meta"], state))
        runs.append(entry["run"])
    th = header["thresholds"]
    return Bundle(
        config=stored,
        config_hash=header["config_hash"],
        feature_names=tuple(header["feature_names"]),
        preprocessor=pre,
        runs=runs,
        models=models,
        thresholds=None if th is None else [ThresholdPair(a, b) for a, b in th],
        selected=header["selected"],
    )


# -- stages -----------------------------------------------------------------------


def cmd_synth(cfg: RunConfig, out_dir) -> list[dict]:
    out_dir = Path(out_dir)
    if out_dir.exists() and not out_dir.is_dir():
        raise PipelineError(f"{out_dir} exists and is not a directory")
    return generate_dataset(cfg.dataset, cfg.seed, out_dir, cfg.train)


def _split_rows(store: FeatureStore, manifest: Manifest, split: str):
    records = manifest.select(split=split)
    if not records:
        raise PipelineError(f"manifest has no {split!r} records")
    return records, store.rows([r.path for r in records])


def cmd_train(store: FeatureStore, manifest: Manifest, cfg: RunConfig, out_path=None) -> Bundle:
    records, X = _split_rows(store, manifest, "train")
    if any(r.split != "train" for r in records):
        raise PipelineError("training rows must come from the training split")
    pre = fit_preprocessor(cfg.preprocessor_kind, X, cfg.pca_variance)
    Z = pre.transform(X)
    runs, models = [], []
    for label, occ_cfg in cfg.run_configs():
        runs.append(label)
        models.append(fit_occ(cfg.occ_kind, Z, occ_cfg))
        log.info("trained %s run %s", cfg.occ_kind, label)
    b = Bundle(cfg, cfg.model_hash(), store.names, pre, runs, models)
    if out_path is not None:
        save_bundle(b, out_path)
    return b


def _labeled(scores, records) -> list[LabeledScore]:
    return [LabeledScore(float(s), r.label, r.noise) for s, r in zip(scores, records)]


def _check_names(b: Bundle, store: FeatureStore):
    if store.names != b.feature_names:
        raise PipelineError("feature store columns differ from the ones the bundle was trained on")


def cmd_calibrate(b: Bundle, store: FeatureStore, manifest: Manifest, out_path=None) -> Bundle:
    """Per model thresholds from the validation split; pick the model with fewest misses."""
    _check_names(b, store)
    records, X = _split_rows(store, manifest, "validation")
    labels = [r.label for r in records]
    if "good" not in labels or "error" not in labels:
        raise PipelineError("validation split needs 'good' and 'error' records")
    all_scores = b.scores(X)
    thresholds, ranking = [], []
    for k, s in enumerate(all_scores):
        th = extract_thresholds(_labeled(s, records))
        thresholds.append(th)
        mf = metrics(classify_many(s, th), labels).MF
        ranking.append((mf, -roc(_labeled(s, records), ACCEPT_GOOD).auc, k))
    b = replace(b, thresholds=thresholds, selected=min(ranking)[2])
    if out_path is not None:
        save_bundle(b, out_path)
    return b


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6f}"


@dataclass(frozen=True)
class EvaluationResult:
    rows: list[dict]
    breakdown: list[dict]


def evaluate_bundle(b: Bundle, store: FeatureStore, manifest: Manifest, split: str | None = None) -> EvaluationResult:
    if not b.calibrated:
        raise PipelineError("bundle is not calibrated")
    _check_names(b, store)
    split = split or b.config.test_split
    val_records, X_val = _split_rows(store, manifest, "validation")
    test_records, X_test = _split_rows(store, manifest, split)
    val_labels = [r.label for r in val_records]
    test_labels = [r.label for r in test_records]
    val_scores, test_scores = b.scores(X_val), b.scores(X_test)

    fs, kind = b.config.feature_set, b.config.occ_kind
    rows, test_verdicts = [], []
    for k, run in enumerate(b.runs):
        th = b.thresholds[k]
        lv = _labeled(val_scores[k], val_records)
        verdicts_t = classify_many(test_scores[k], th)
        test_verdicts.append(verdicts_t)
        m_t = metrics(verdicts_t, test_labels)
        rows.append(
            {
                "feature_set": fs,
                "model": kind,
                "seed": run,
                "AUC_g": roc(lv, ACCEPT_GOOD).auc,
                "AUC_w": roc(lv, ACCEPT_GOOD_WARNING).auc,
                "MF_v": metrics(classify_many(val_scores[k], th), val_labels).MF,
                "MF_t": m_t.MF,
                "PF_t": m_t.PF,
                "Acc": m_t.Acc,
            }
        )
    best = {"feature_set": fs, "model": kind, "seed": "best"}
    delta = {"feature_set": fs, "model": kind, "seed": "delta"}
    for col, higher in HIGHER_IS_BETTER.items():
        values = [r[col] for r in rows]
        bv, dv = best_and_delta(values, higher)
        is_int = all(isinstance(v, int) for v in values)
        best[col], delta[col] = (int(bv), int(dv)) if is_int else (bv, dv)
    selected = dict(rows[b.selected], seed=f"selected:{b.runs[b.selected]}")
    all_rows = rows + [best, delta, selected]

    breakdown = []
    noises = [r.noise for r in test_records]
    for cond in BREAKDOWN_CONDITIONS:
        idx = [i for i, n in enumerate(noises) if n == cond]
        if not idx:
            continue
        sel = test_verdicts[b.selected]
        entry = {"noise": cond}
        for lab in ("good", "warning", "error"):
            members = [i for i in idx if test_labels[i] == lab]
            entry[f"n_{lab}"] = len(members)
            for verdict in ("good", "warning", "error"):
                entry[f"{lab}_as_{verdict}"] = sum(sel[i] == verdict for i in members)
        entry["PF_all_runs"] = sum(
            v[i] == "error" for v in test_verdicts for i in idx if test_labels[i] == "good"
        )
        entry["MF_all_runs"] = sum(
            v[i] != "error" for v in test_verdicts for i in idx if test_labels[i] == "error"
        )
        breakdown.append(entry)
    return EvaluationResult(all_rows, breakdown)


def _csv_text(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r[c] if isinstance(r[c], str) else _fmt(r[c]) for c in columns])
    return buf.getvalue()


def report_csv(result: EvaluationResult) -> str:
    return _csv_text(result.rows, REPORT_COLUMNS)


def breakdown_csv(result: EvaluationResult) -> str:
    if not result.breakdown:
        return ""
    return _csv_text(result.breakdown, tuple(result.breakdown[0]))


def cmd_evaluate(b: Bundle, store: FeatureStore, manifest: Manifest, out_dir=None, split=None) -> EvaluationResult:
    result = evaluate_bundle(b, store, manifest, split)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(report_csv(result))
        if result.breakdown:
            (out_dir / "disturbance_breakdown.csv").write_text(breakdown_csv(result))
    return result


_SEVERITY = {"good": 0, "warning": 1, "error": 2}


def majority_verdict(verdicts) -> str:
    """Most frequent verdict; a tie goes to the worse one."""
    counts = {v: list(verdicts).count(v) for v in set(verdicts)}
    top = max(counts.values())
    return max((v for v, c in counts.items() if c == top), key=_SEVERITY.__getitem__)


def predict_signal(b: Bundle, signal: TimeSignal, mode: str | None = None) -> tuple[str, float]:
    if not b.calibrated:
        raise PipelineError("bundle is not calibrated; run calibrate first")
    fv = extract_features(signal, b.config)
    if fv.names != b.feature_names:
        raise PipelineError("record yields different features than the bundle was trained on")
    scores = b.scores(fv.values[None, :])[:, 0]
    mode = mode or b.config.predict_mode
    if mode == "selected":
        k = b.selected
        return classify(float(scores[k]), b.thresholds[k]), float(scores[k])
    if mode == "majority":
        verdicts = [classify(float(s), th) for s, th in zip(scores, b.thresholds)]
        return majority_verdict(verdicts), float(scores.mean())
    raise PipelineError(f"unknown prediction mode {mode!r}")


def cmd_predict(b: Bundle, wav_path, mode: str | None = None, strict: bool | None = None) -> tuple[str, float]:
    sig = read_wav(wav_path)
    validate_measurement(sig, strict=b.config.strict_io if strict is None else strict)
    return predict_signal(b, sig, mode)


def run_study(cfg: RunConfig, manifest: Manifest | str | Path, out_dir, store: FeatureStore | None = None, jobs: int = 1):
    """Extract (unless a store is given), train, calibrate and evaluate in one go."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not isinstance(manifest, Manifest):
        manifest = load_manifest(manifest)
    if store is None:
        store = cmd_extract(manifest, cfg, out_dir / "features.csv", jobs=jobs)
    b = cmd_train(store, manifest, cfg)
    b = cmd_calibrate(b, store, manifest, out_dir / "model.bundle")
    return b, cmd_evaluate(b, store, manifest, out_dir)
