import json

import numpy as np
import pytest

from qattention.dataset import digest_bytes, generate_dataset, load_dataset, manifest_text
from qattention.errors import CompatibilityError, GridError, NumericalHealthError
from qattention.hamiltonian import PhaseLabel


@pytest.fixture(scope="module")
def ds():
    return generate_dataset(N=5, shape=(5, 7), seed=3, h1_range=(0.0, 1.6), h2_range=(-1.6, 1.6))


def test_grid_shape_and_order(ds):
    assert len(ds) == 35 and ds.shape == (5, 7)
    assert ds.records[8].h1 == ds.h1_values[1] and ds.records[8].h2 == ds.h2_values[1]
    assert all(r.index == k for k, r in enumerate(ds.records))


def test_sample_count_check():
    with pytest.raises(GridError):
        generate_dataset(N=3, shape=(2, 3), n_samples=7)


def test_records_are_consistent(ds):
    for r in ds.records:
        assert abs(r.string_order) <= 1 + 1e-9
        assert r.gap >= -1e-12
        assert abs(r.norm - 1) < 1e-12


def test_cluster_corner_is_spt():
    d = generate_dataset(N=7, shape=(3, 3), h1_range=(0.0, 1.0), h2_range=(0.0, 1.0))
    assert d.records[0].label is PhaseLabel.SPT and abs(d.records[0].string_order - 1) < 1e-10


def test_deterministic_manifest(ds):
    again = generate_dataset(N=5, shape=(5, 7), seed=3)
    assert manifest_text(ds.manifest()) == manifest_text(again.manifest())


def test_parallel_matches_serial(ds):
    par = generate_dataset(N=5, shape=(5, 7), seed=3, jobs=2)
    assert manifest_text(ds.manifest()) == manifest_text(par.manifest())
    assert np.array_equal(ds.states_array(), par.states_array())


def test_round_trip_with_shards(ds, tmp_path):
    path = ds.write(tmp_path, shards=True)
    back = load_dataset(tmp_path)
    assert np.array_equal(back.states_array(), ds.states_array())
    assert [r.row() for r in back.records] == [r.row() for r in ds.records]
    assert (tmp_path / "states.bin").stat().st_size == 35 * 32 * 16
    ds.write(tmp_path / "again", shards=True)
    assert digest_bytes(path.read_bytes()) == digest_bytes((tmp_path / "again" / "manifest.json").read_bytes())


def test_regenerates_without_shards(ds, tmp_path):
    ds.write(tmp_path, shards=False)
    back = load_dataset(tmp_path / "manifest.json")
    assert back.records[4].state is None
    assert np.allclose(back.state(4).amplitudes, ds.state(4).amplitudes, atol=1e-10)


def test_corrupt_shard(ds, tmp_path):
    ds.write(tmp_path, shards=True)
    blob = np.fromfile(tmp_path / "states.bin", dtype="<c16")
    blob[40] *= 2
    blob.tofile(tmp_path / "states.bin")
    with pytest.raises(NumericalHealthError):
        load_dataset(tmp_path)


def test_schema_mismatch(ds, tmp_path):
    path = ds.write(tmp_path)
    doc = json.loads(path.read_text())
    doc["schema_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(CompatibilityError):
        load_dataset(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "nope")
