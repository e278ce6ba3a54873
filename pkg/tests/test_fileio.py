import json

import numpy as np
import pytest

from swapnet import channels, fileio, networks, qmath
from swapnet.fileio import FormatError


def test_matrix_roundtrip(tmp_path):
    m = qmath.random_hermitian(3, seed=1)
    path = tmp_path / "m.json"
    fileio.save_matrix(path, m)
    assert np.array_equal(fileio.load_matrix(path), m)


def test_density_kind_tag():
    doc = fileio.matrix_to_dict(qmath.maximally_mixed(2))
    assert doc["kind"] == "density"
    assert doc["entries"] == [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]]


def test_row_major():
    m = np.array([[1, 2j], [3, 4]])
    doc = fileio.matrix_to_dict(m)
    assert doc["entries"][1] == [0.0, 2.0] and doc["entries"][2] == [3.0, 0.0]


@pytest.mark.parametrize(
    "doc, fragment",
    [
        ({"dim_rows": 2, "dim_cols": 2, "entries": [[1, 0]] * 3}, "expected 4"),
        ({"dim_rows": 1, "dim_cols": 2, "entries": [[1, 0], [1]]}, "entries[1]"),
        ({"dim_rows": 1, "dim_cols": 2, "entries": [[1, 0], "x"]}, "entries[1]"),
        ({"dim_rows": 0, "dim_cols": 2, "entries": []}, "dim_rows"),
        ({"dim_cols": 2, "entries": []}, "dim_rows"),
    ],
)
def test_malformed_matrix(doc, fragment):
    with pytest.raises(FormatError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
        fileio.matrix_from_dict(doc)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        fileio.load_matrix(p)


def test_network_roundtrip():
    spec = networks.swap_network(2)
    doc = json.loads(json.dumps(fileio.network_to_dict(spec)))
    back = fileio.network_from_dict(doc)
    assert back.target_dim == 4 and np.array_equal(back.unitary, spec.unitary)


def test_channel_roundtrip(tmp_path):
    ch = channels.amplitude_damping(0.3)
    p = tmp_path / "ch.json"
    p.write_text(json.dumps(fileio.channel_to_dict(ch)))
    back = fileio.load_channel(p)
    assert back.label == ch.label
    rho = qmath.random_density(2, seed=1)
    assert np.allclose(back(rho), ch(rho))


def test_channel_dim_mismatch():
    doc = fileio.channel_to_dict(channels.identity_channel(2))
    doc["dim"] = 3
    with pytest.raises(FormatError):
        fileio.channel_from_dict(doc)
