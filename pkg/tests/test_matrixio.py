import json

import numpy as np
import pytest

from annulus_dilation.matrixio import (
    MatrixFormatError,
    config_hash,
    dumps_report,
    load_matrix,
    loads_matrix,
    matrix_to_obj,
    save_matrix,
)


def test_round_trip(tmp_path, rng):
    a = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    path = tmp_path / "a.json"
    save_matrix(path, a)
    assert np.array_equal(load_matrix(path), a)


def test_real_only():
    a = loads_matrix(json.dumps({"rows": 1, "cols": 2, "re": [[1, 2]]}))
    assert a.dtype == np.complex128 and a[0, 1] == 2


@pytest.mark.parametrize(
    "text",
    [
        "[1, 2]",
        '{"rows": 2, "cols": 2, "re": [[1, 2]]}',
        '{"rows": 1, "cols": 1, "re": [[NaN]]}',
        '{"rows": 1, "cols": 1}',
        '{"rows": 0, "cols": 1, "re": []}',
        "{not json",
    ],
)
def test_malformed(text):
    with pytest.raises(MatrixFormatError):
        loads_matrix(text)


def test_report_is_deterministic():
    rep = {"b": np.float64(1.5), "a": np.arange(3), "m": np.eye(2) * 1j}
    assert dumps_report(rep) == dumps_report(dict(reversed(list(rep.items()))))
    assert config_hash({"x": 1, "y": [1, 2]}) == config_hash({"y": [1, 2], "x": 1})
    assert json.loads(dumps_report({"m": matrix_to_obj(np.eye(2))}))["m"]["rows"] == 2
