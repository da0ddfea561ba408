"""One-class classifiers. All report a similarity: higher means more normal."""

from gearline.occ.base import OccConfig, OccError, OccModel
from gearline.occ.brm import BaggingRandomMinerModel, brm_fit
from gearline.occ.iforest import IsolationForestModel, average_path_length, iforest_fit
from gearline.occ.ocsvm import OneClassSvmModel, ocsvm_fit

OCC_KINDS = ("ocsvm", "iforest", "brm")

_FITTERS = {"ocsvm": ocsvm_fit, "iforest": iforest_fit, "brm": brm_fit}
_MODELS = {cls.kind: cls for cls in (OneClassSvmModel, IsolationForestModel, BaggingRandomMinerModel)}


def fit_occ(kind: str, X, cfg: OccConfig) -> OccModel:
    try:
        fitter = _FITTERS[kind]
    except KeyError:
        raise OccError(f"unknown classifier {kind!r}; expected one of {OCC_KINDS}") from None
    return fitter(X, cfg)


def model_from_state(kind: str, meta: dict, arrays: dict) -> OccModel:
    return _MODELS[kind].from_state(meta, arrays)


def score(model: OccModel, x) -> float:
    return model.score(x)


__all__ = [
    "OCC_KINDS",
    "BaggingRandomMinerModel",
    "IsolationForestModel",
    "OccConfig",
    "OccError",
    "OccModel",
    "OneClassSvmModel",
    "average_path_length",
    "brm_fit",
    "fit_occ",
    "iforest_fit",
    "model_from_state",
    "ocsvm_fit",
    "score",
]
