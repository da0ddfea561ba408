import hashlib
import json
from collections import Counter

import numpy as np
import pytest

from gearline.dataset_io import read_wav
from gearline.features.envelope import ff_window_value, les_ff, log_envelope_spectrum
from gearline.features.psycho import ModulationModelConfig, pa_features
from gearline.kinematics import FaultFrequency, fault_frequency_set
from gearline.signals import BandSpec, TimeSignal, bandpass
from gearline.synth import (
    DISTURBANCE_KINDS,
    DatasetSpec,
    DisturbanceRecipe,
    FaultRecipe,
    MotorRecipe,
    SEVERITY_BANDS,
    disturbance_waveform,
    generate_dataset,
    inject_disturbance,
    plan_dataset,
    synth_motor,
)

FS = 50000.0
N = 2**18
BAND = BandSpec(1150.0, 5100.0)
PSY = ModulationModelConfig()


@pytest.fixture(scope="module")
def ffs(train):
    return {ff.label: ff for ff in fault_frequency_set(train)}


def les_at(sig, hz):
    return ff_window_value(log_envelope_spectrum(sig, BAND), hz, 0.01)


def roughness(sig):
    return pa_features(bandpass(sig, BAND), PSY).values[0]


def rms(x):
    return float(np.sqrt(np.mean(np.asarray(x) ** 2)))


class TestMotor:
    def test_record_geometry(self, train):
        sig = synth_motor(MotorRecipe(train))
        assert len(sig) == N and sig.sample_rate_hz == FS

    def test_severity_zero_is_healthy(self, train, ffs):
        m = MotorRecipe(train, seed=11)
        healthy = synth_motor(m).samples
        for kind in ("impulsive", "circumferential"):
            assert np.array_equal(synth_motor(m, FaultRecipe(kind, ffs["shaft1_h1"], 0.0)).samples, healthy)

    def test_deterministic(self, train, ffs):
        m = MotorRecipe(train, seed=4)
        fault = FaultRecipe("impulsive", ffs["mesh2_center"], 0.7)
        assert np.array_equal(synth_motor(m, fault).samples, synth_motor(m, fault).samples)

    @pytest.mark.parametrize("seed", range(3))
    def test_impulsive_fault_in_les(self, train, ffs, seed):
        m = MotorRecipe(train, seed=seed)
        f1 = ffs["shaft1_h1"]
        assert f1.hz == pytest.approx(22.917, abs=1e-3)
        faulty = synth_motor(m, FaultRecipe("impulsive", f1, 1.0))
        assert les_at(faulty, f1.hz) >= 10 * les_at(synth_motor(m), f1.hz)

    @pytest.mark.parametrize("target", ["shaft1_h1", "mesh2_center"])
    def test_circumferential_raises_roughness(self, train, ffs, target):
        for seed in range(3):
            m = MotorRecipe(train, seed=seed)
            faulty = synth_motor(m, FaultRecipe("circumferential", ffs[target], 1.0))
            assert roughness(faulty) > roughness(synth_motor(m))

    def test_circumferential_at_gmf1(self, train, ffs):
        # far above the roughness peak, so visible in the LES but hardly in roughness
        gmf1 = ffs["mesh1_center"]
        m = MotorRecipe(train, seed=0)
        healthy = synth_motor(m)
        faulty = synth_motor(m, FaultRecipe("circumferential", gmf1, 1.0))
        assert les_at(faulty, gmf1.hz) >= 10 * les_at(healthy, gmf1.hz)
        assert abs(roughness(faulty) / roughness(healthy) - 1) < 0.2

    @pytest.mark.parametrize("kind", ["impulsive", "circumferential"])
    def test_severity_monotone(self, train, ffs, kind):
        target = ffs["shaft2_h1"]
        means = []
        for severity in (0.0, 0.3, 1.0):
            vals = []
            for seed in range(3):
                sig = synth_motor(MotorRecipe(train, seed=seed), FaultRecipe(kind, target, severity))
                vals.append(les_ff(log_envelope_spectrum(sig, BAND), [target]).values[0])
            means.append(np.mean(vals))
        assert means[0] <= means[1] <= means[2]

    def test_speed_deviation_inside_window(self, train, ffs):
        target = ffs["shaft1_h1"]
        for dev in (-0.008, 0.008):
            m = MotorRecipe(train, speed_deviation_frac=dev, seed=2)
            faulty = synth_motor(m, FaultRecipe("impulsive", target, 1.0))
            assert les_at(faulty, target.hz) >= 10 * les_at(synth_motor(m), target.hz)

    def test_foreign_target(self, train):
        bogus = FaultFrequency(37.0, "bogus", "shaft_harmonic")
        with pytest.raises(ValueError):
            synth_motor(MotorRecipe(train), FaultRecipe("impulsive", bogus, 1.0))

    @pytest.mark.parametrize(
        "kwargs",
        [{"speed_deviation_frac": 0.02}, {"sideband_depth": 1.0}, {"noise_floor_rms": 0.0}, {"duration_s": 30.0}],
    )
    def test_recipe_validation(self, train, kwargs):
        with pytest.raises(ValueError):
            MotorRecipe(train, **kwargs)

    def test_fault_validation(self, ffs):
        with pytest.raises(ValueError):
            FaultRecipe("impulsive", None, 1.0)
        with pytest.raises(ValueError):
            FaultRecipe("impulsive", ffs["shaft1_h1"], -0.1)
        with pytest.raises(ValueError):
            FaultRecipe("pitting", ffs["shaft1_h1"], 1.0)


class TestDisturbances:
    @pytest.mark.parametrize("kind", DISTURBANCE_KINDS)
    def test_unit_rms_and_level(self, train, kind):
        sig = synth_motor(MotorRecipe(train, seed=1))
        assert rms(disturbance_waveform(DisturbanceRecipe(kind, "loud", 3), N, FS)) == pytest.approx(1.0)
        for level, ratio in (("low", 0.5), ("loud", 2.0)):
            out = inject_disturbance(sig, DisturbanceRecipe(kind, level, 3))
            assert rms(out.samples - sig.samples) == pytest.approx(ratio * rms(sig.samples), rel=1e-9)

    def test_ratio_zero_is_identity(self, train):
        sig = synth_motor(MotorRecipe(train))
        assert np.array_equal(inject_disturbance(sig, DisturbanceRecipe("music", 0.0)).samples, sig.samples)

    @pytest.mark.parametrize("seed", range(3))
    def test_ventilation_mostly_out_of_band(self, seed):
        d = disturbance_waveform(DisturbanceRecipe("ventilation", "loud", seed), N, FS)
        power = np.abs(np.fft.rfft(d)) ** 2
        f = np.fft.rfftfreq(N, 1 / FS)
        assert power[f < 1150].sum() > power[(f >= 1150) & (f <= 5100)].sum()
        assert rms(bandpass(TimeSignal(d, FS), BAND).samples) <= 0.1 * rms(d)

    @pytest.mark.parametrize("seed", range(3))
    def test_hammer_impulsive_after_filter(self, seed):
        d = bandpass(TimeSignal(disturbance_waveform(DisturbanceRecipe("hammer", "loud", seed), N, FS), FS), BAND)
        assert np.max(np.abs(d.samples)) / rms(d.samples) >= 5

    def test_hammer_has_low_and_in_band_energy(self):
        d = disturbance_waveform(DisturbanceRecipe("hammer", "loud", 0), N, FS)
        power = np.abs(np.fft.rfft(d)) ** 2
        f = np.fft.rfftfreq(N, 1 / FS)
        total = power.sum()
        assert power[f < 1150].sum() > 0.05 * total
        assert power[(f >= 1150) & (f <= 5100)].sum() > 0.05 * total

    @pytest.mark.parametrize("seed", range(3))
    def test_wrench_half_the_record(self, seed):
        d = disturbance_waveform(DisturbanceRecipe("wrench", "loud", seed), N, FS)
        env = np.sqrt(np.convolve(d**2, np.ones(2500) / 2500, mode="same"))
        assert np.mean(env > 0.1 * env.max()) == pytest.approx(0.5, abs=0.05)

    def test_music_is_tonal_below_band(self):
        d = disturbance_waveform(DisturbanceRecipe("music", "loud", 0), N, FS)
        power = np.abs(np.fft.rfft(d)) ** 2
        f = np.fft.rfftfreq(N, 1 / FS)
        assert power[(f >= 150) & (f <= 900)].sum() > 0.5 * power.sum()

    def test_unknown_kind_and_level(self):
        with pytest.raises(ValueError):
            DisturbanceRecipe("drill")
        with pytest.raises(ValueError):
            DisturbanceRecipe("music", "deafening")


class TestDataset:
    def test_default_counts(self):
        plan = plan_dataset(DatasetSpec(), seed=0)
        counts = Counter(e["split"] for e in plan)
        assert counts["train"] == 42
        assert counts["disturbance"] == 28
        assert 30 <= counts["validation"] <= 50
        train_labels = Counter(e["label"] for e in plan if e["split"] == "train")
        assert train_labels == {"good": 25, "warning": 17}
        val_labels = Counter(e["label"] for e in plan if e["split"] == "validation")
        assert set(val_labels) == {"good", "warning", "error"}

    def test_disturbance_protocol(self):
        plan = plan_dataset(DatasetSpec(), seed=0)
        dist = [e for e in plan if e["split"] == "disturbance"]
        assert Counter(e["noise"] for e in dist) == {k: 4 for k in ("none",) + DISTURBANCE_KINDS}
        assert Counter(e["label"] for e in dist) == {"good": 14, "error": 14}
        seen = {(e["label"], e["fault"]) for e in plan if e["split"] != "disturbance"}
        assert all((e["label"], e["fault"]) in seen for e in dist)

    def test_severity_bands(self):
        for e in plan_dataset(DatasetSpec(), seed=3):
            lo, hi = SEVERITY_BANDS[e["label"]]
            assert lo <= e["fault"].severity <= hi
            assert abs(e["motor"].speed_deviation_frac) <= 0.01

    def test_bitwise_reproducible(self, tmp_path):
        spec = DatasetSpec(2, 1, 1, 1, 1, 1, 1, duration_s=0.5)
        digests = []
        for name in ("a", "b"):
            records = generate_dataset(spec, 5, tmp_path / name)
            digests.append(
                [hashlib.sha256((tmp_path / name / r["path"]).read_bytes()).hexdigest() for r in records]
                + [hashlib.sha256((tmp_path / name / "manifest.json").read_bytes()).hexdigest()]
            )
        assert digests[0] == digests[1]

    def test_manifest_and_wav_format(self, tmp_path):
        spec = DatasetSpec(2, 1, 1, 1, 1, 1, 1, duration_s=0.5)
        generate_dataset(spec, 1, tmp_path)
        entries = json.loads((tmp_path / "manifest.json").read_text())
        assert len(entries) == 3 + 3 + 2 * 7
        assert set(entries[0]) == {"path", "label", "noise", "split", "recipes"}
        sig = read_wav(tmp_path / entries[0]["path"])
        assert sig.sample_rate_hz == FS and len(sig) == 25000

    def test_seed_changes_data(self):
        a = plan_dataset(DatasetSpec(), seed=0)[0]["motor"]
        b = plan_dataset(DatasetSpec(), seed=1)[0]["motor"]
        assert a != b
