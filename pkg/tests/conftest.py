from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gearline.config import RunConfig  # noqa: E402
from gearline.dataset_io import load_manifest  # noqa: E402
from gearline.kinematics import reference_train  # noqa: E402
from gearline.pipeline import cmd_extract, cmd_synth, run_study  # noqa: E402
from gearline.signals import BandSpec  # noqa: E402
from gearline.synth import DatasetSpec  # noqa: E402

FS = 50000.0
N = 2**18


@pytest.fixture(scope="session")
def train():
    return reference_train()


@pytest.fixture(scope="session")
def band():
    return BandSpec(1150.0, 5100.0)


@pytest.fixture(scope="session")
def t_full():
    return np.arange(N) / FS


class StudyData:
    """Default synthetic dataset plus lazily extracted feature stores."""

    def __init__(self, root: Path):
        self.root = root
        self.cfg = RunConfig()
        cmd_synth(self.cfg, root / "data")
        self.manifest_path = root / "data" / "manifest.json"
        self.manifest = load_manifest(self.manifest_path)
        self._stores = {}
        self._runs = {}

    def store(self, feature_set: str):
        if feature_set not in self._stores:
            cfg = RunConfig(feature_set=feature_set)
            self._stores[feature_set] = cmd_extract(self.manifest, cfg, self.root / f"{feature_set}.csv")
        return self._stores[feature_set]

    def run(self, feature_set: str, occ_kind: str = "iforest"):
        """(bundle, EvaluationResult) of the five-run study, computed once."""
        key = (feature_set, occ_kind)
        if key not in self._runs:
            cfg = RunConfig(feature_set=feature_set, occ_kind=occ_kind)
            out = self.root / f"{feature_set}_{occ_kind}"
            self._runs[key] = run_study(cfg, self.manifest, out, store=self.store(feature_set))
        return self._runs[key]


@pytest.fixture(scope="session")
def study(tmp_path_factory):
    return StudyData(tmp_path_factory.mktemp("study"))


TINY_SPEC = DatasetSpec(train_good=8, train_warning=2, val_good=3, val_warning=1, val_error=3,
                        disturbance_good=1, disturbance_error=1)


@pytest.fixture(scope="session")
def tiny(tmp_path_factory):
    """Small full-length dataset (10 train, 7 validation, 14 disturbance) plus its config."""
    root = tmp_path_factory.mktemp("tiny")
    cfg = RunConfig(dataset=TINY_SPEC, seed=3)
    cmd_synth(cfg, root / "data")
    return root / "data" / "manifest.json", cfg


SUITE_LIMIT_S = 600.0


class AcceptanceLog:
    """Collects one verdict line per acceptance criterion for the terminal summary."""

    def __init__(self):
        self.lines: list[str] = []

    def __call__(self, n, ok: bool, detail: str, elapsed_s: float, limit_s: float) -> None:
        in_time = elapsed_s < limit_s
        verdict = "PASS" if ok and in_time else "FAIL"
        self.lines.append(f"criterion {n!s:>3}: {verdict}  {detail}  [{elapsed_s:.3f} s, limit {limit_s:g} s]")
        assert ok, detail
        assert in_time, f"took {elapsed_s:.1f} s, limit {limit_s:g} s"


def pytest_configure(config):
    config._acceptance = AcceptanceLog()


def pytest_sessionstart(session):
    session.config._suite_t0 = time.perf_counter()


@pytest.fixture(scope="session")
def acceptance(request):
    return request.config._acceptance


@pytest.hookimpl(tryfirst=True)
def pytest_sessionfinish(session, exitstatus):
    cfg = session.config
    log = cfg._acceptance
    if not log.lines:
        return
    elapsed = time.perf_counter() - cfg._suite_t0
    ok = elapsed < SUITE_LIMIT_S
    log.lines.append(
        f"criterion 10b: {'PASS' if ok else 'FAIL'}  whole suite wall time  [{elapsed:.1f} s, limit {SUITE_LIMIT_S:g} s]"
    )
    if not ok and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config._acceptance.lines
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
