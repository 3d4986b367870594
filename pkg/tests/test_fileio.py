"""Tests for model and dataset serialization."""

import numpy as np
import pytest

from grassbin import Dataset
from grassbin import fileio

from helpers import random_valid_sigma

TRICKY = np.array([
    [np.pi / 7.0, 1.0 / 3.0],
    [-1.0, np.nextafter(0.5, 1.0)],
])


class TestModelFiles:
    def test_round_trip_bit_exact(self, tmp_path):
        path = tmp_path / "model.json"
        fileio.write_model(path, TRICKY, meta={"note": "test"})
        sigma, meta = fileio.read_model(path)
        assert sigma.shape == (2, 2)
        assert np.array_equal(sigma, TRICKY)  # exact, not approximate
        assert meta == {"note": "test"}

    def test_round_trip_random(self, tmp_path):
        rng = np.random.default_rng(0)
        for k in range(10):
            sigma = random_valid_sigma(rng, int(rng.integers(1, 8)))
            path = tmp_path / f"m{k}.json"
            fileio.write_model(path, sigma)
            back, _ = fileio.read_model(path)
            assert np.array_equal(back, sigma)

    def test_seventeen_significant_digits(self):
        text = fileio.model_to_json(TRICKY)
        assert format(np.pi / 7.0, ".17g") in text

    def test_p_field_consistency(self):
        with pytest.raises(ValueError):
            fileio.model_from_json('{"p": 3, "sigma": [[0.5]]}')

    def test_malformed_rejected(self):
        with pytest.raises(ValueError):
            fileio.model_from_json("[1, 2, 3]")
        with pytest.raises(ValueError):
            fileio.model_from_json('{"sigma": [[1, 2, 3], [4, 5, 6]]}')

    def test_hash_stability(self):
        a = fileio.model_hash(TRICKY)
        assert a == fileio.model_hash(TRICKY.copy())
        assert a != fileio.model_hash(np.eye(2) * 0.5)


class TestDatasetFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        data = Dataset(rng.integers(0, 2, size=(40, 3)).astype(np.uint8))
        path = tmp_path / "data.csv"
        fileio.write_dataset(path, data, meta={"seed": "7", "rng": "numpy-pcg64"})
        back, meta = fileio.read_dataset(path)
        assert np.array_equal(back.rows, data.rows)
        assert back.counts == data.counts
        assert meta["seed"] == "7"
        assert meta["rng"] == "numpy-pcg64"

    def test_header_only_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        fileio.write_dataset(path, Dataset(np.empty((0, 2), dtype=np.uint8)))
        back, _ = fileio.read_dataset(path)
        assert back.n == 0 and back.p == 2

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n0,1\n")
        with pytest.raises(ValueError):
            fileio.read_dataset(path)

    def test_bad_values(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,x2\n0,2\n")
        with pytest.raises(ValueError):
            fileio.read_dataset(path)
        path.write_text("x1,x2\n0\n")
        with pytest.raises(ValueError):
            fileio.read_dataset(path)
