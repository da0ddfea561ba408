import json

import numpy as np
import pytest
from scipy.io import wavfile

from gearline.dataset_io import (
    DatasetError,
    load_manifest,
    parse_manifest,
    read_wav,
    validate_measurement,
    write_wav,
)
from gearline.signals import TimeSignal


def noise(n, fs=50000.0, seed=0):
    return TimeSignal(np.random.default_rng(seed).uniform(-0.9, 0.9, n), fs)


class TestWav:
    def test_float32_roundtrip(self, tmp_path):
        sig = noise(1000)
        write_wav(tmp_path / "a.wav", sig)
        once = read_wav(tmp_path / "a.wav")
        assert np.array_equal(once.samples, sig.samples.astype(np.float32).astype(np.float64))
        write_wav(tmp_path / "b.wav", once)
        assert (tmp_path / "a.wav").read_bytes() == (tmp_path / "b.wav").read_bytes()
        assert once.sample_rate_hz == 50000.0

    def test_int16_scaling(self, tmp_path):
        wavfile.write(tmp_path / "i.wav", 48000, np.array([32767, -32768, 0, 16384], dtype=np.int16))
        sig = read_wav(tmp_path / "i.wav")
        assert sig.samples.tolist() == [32767 / 32768, -1.0, 0.0, 0.5]
        assert sig.sample_rate_hz == 48000.0

    def test_stereo_rejected(self, tmp_path):
        wavfile.write(tmp_path / "s.wav", 50000, np.zeros((100, 2), dtype=np.float32))
        with pytest.raises(DatasetError, match="mono"):
            read_wav(tmp_path / "s.wav")

    def test_truncated(self, tmp_path):
        write_wav(tmp_path / "t.wav", noise(5000))
        raw = (tmp_path / "t.wav").read_bytes()
        (tmp_path / "t.wav").write_bytes(raw[: len(raw) // 2])
        with pytest.raises(DatasetError):
            read_wav(tmp_path / "t.wav")

    def test_not_a_wav(self, tmp_path):
        (tmp_path / "x.wav").write_bytes(b"hello world, not RIFF")
        with pytest.raises(DatasetError):
            read_wav(tmp_path / "x.wav")

    def test_unsupported_encoding(self, tmp_path):
        wavfile.write(tmp_path / "u.wav", 50000, np.zeros(100, dtype=np.int32))
        with pytest.raises(DatasetError, match="unsupported"):
            read_wav(tmp_path / "u.wav")

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_wav(tmp_path / "nope.wav")

    def test_fractional_rate(self, tmp_path):
        with pytest.raises(DatasetError):
            write_wav(tmp_path / "f.wav", TimeSignal(np.zeros(10), 44100.5))


class TestValidation:
    def test_nominal_strict(self):
        validate_measurement(TimeSignal(np.zeros(2**18), 50000.0), strict=True)

    def test_48k(self):
        sig = TimeSignal(np.zeros(2**18), 48000.0)
        with pytest.raises(DatasetError):
            validate_measurement(sig, strict=True)
        validate_measurement(sig, strict=False)

    def test_wrong_length_strict(self):
        with pytest.raises(DatasetError):
            validate_measurement(TimeSignal(np.zeros(2**18 - 1), 50000.0), strict=True)

    def test_8k_lenient(self):
        with pytest.raises(DatasetError):
            validate_measurement(TimeSignal(np.zeros(80000), 8000.0), strict=False)

    def test_short_lenient(self):
        with pytest.raises(DatasetError):
            validate_measurement(TimeSignal(np.zeros(90000), 48000.0), strict=False)


def entry(path="a.wav", label="good", noise="none", split="train"):
    return {"path": path, "label": label, "noise": noise, "split": split}


class TestManifest:
    def test_parse(self, tmp_path):
        m = parse_manifest([entry(), entry("b.wav", "error", "hammer", "disturbance")], tmp_path)
        assert len(m.records) == 2
        assert m.select(split="disturbance")[0].noise == "hammer"
        assert m.resolve(m.records[0]) == tmp_path / "a.wav"

    def test_noise_defaults_to_none(self, tmp_path):
        e = entry()
        del e["noise"]
        assert parse_manifest([e], tmp_path).records[0].noise == "none"

    @pytest.mark.parametrize("field, value", [("label", "bad"), ("noise", "thunder"), ("split", "test")])
    def test_vocabulary(self, tmp_path, field, value):
        with pytest.raises(DatasetError):
            parse_manifest([entry(**{field: value})], tmp_path)

    def test_duplicate_paths(self, tmp_path):
        with pytest.raises(DatasetError, match="duplicate"):
            parse_manifest([entry(), entry(label="error")], tmp_path)

    def test_missing_field(self, tmp_path):
        with pytest.raises(DatasetError, match="missing"):
            parse_manifest([{"path": "a.wav", "label": "good"}], tmp_path)

    def test_load_and_validate(self, tmp_path):
        write_wav(tmp_path / "a.wav", noise(2**18))
        write_wav(tmp_path / "b.wav", noise(2**18, fs=48000.0))
        (tmp_path / "m.json").write_text(json.dumps([entry(), entry("b.wav")]))
        m = load_manifest(tmp_path / "m.json")
        assert len(m.load(m.records[0])) == 2**18
        with pytest.raises(DatasetError, match="b.wav"):
            m.load(m.records[1], strict=True)
        assert m.load(m.records[1], strict=False).sample_rate_hz == 48000.0

    def test_not_a_list(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps({"records": []}))
        with pytest.raises(DatasetError):
            load_manifest(tmp_path / "m.json")
