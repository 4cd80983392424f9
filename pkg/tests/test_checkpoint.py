"""Checkpoint binary format: round trip, determinism, and version gating."""

import numpy as np
import pytest

from editseg.checkpoint import FORMAT_TAG, load_checkpoint, save_checkpoint
from editseg.generation import Rectangle
from editseg.supervision import EditType


def test_round_trip_preserves_arrays_and_meta(tmp_path):
    arrays = {
        "b.weights": np.arange(6, dtype=float).reshape(2, 3),
        "a.scalarish": np.array(3.5),
    }
    meta = {"epoch": 4, "note": "héllo"}
    path = tmp_path / "m.run"
    save_checkpoint(path, arrays, meta)
    loaded, got_meta = load_checkpoint(path)
    assert got_meta == meta
    assert set(loaded) == set(arrays)
    for name in arrays:
        assert np.array_equal(loaded[name], arrays[name])
        assert loaded[name].dtype == np.float64


def test_identical_state_gives_identical_bytes(tmp_path):
    arrays = {"w": np.linspace(0, 1, 7)}
    save_checkpoint(tmp_path / "a", arrays, {"epoch": 1})
    save_checkpoint(tmp_path / "b", arrays, {"epoch": 1})
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_unknown_format_tag_rejected(tmp_path):
    path = tmp_path / "m.run"
    save_checkpoint(path, {"w": np.zeros(2)}, {})
    raw = path.read_bytes()
    tampered = raw.replace(FORMAT_TAG.encode(), b"run-v9")
    path.write_bytes(tampered)
    with pytest.raises(ValueError, match="run-v9"):
        load_checkpoint(path)


def test_rectangle_rejects_empty_ranges():
    with pytest.raises(ValueError):
        Rectangle(EditType.INSERT, 2, 2, 0, 1)
    with pytest.raises(ValueError):
        Rectangle(EditType.SUBSTITUTE, 0, 1, 3, 3)
