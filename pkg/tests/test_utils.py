"""
Test the utilities.

@author: Antoine COLLET
"""

import numpy as np
import pytest

from phasetopo.utils import (
    complex_to_pairs,
    derive_seed,
    pairs_to_complex,
    read_json,
    replace_bad_path_characters,
    sidecar_path,
    splitmix64,
    write_json,
)


@pytest.fixture
def tmp_folder(tmp_path_factory):
    """Create a temporary directory"""
    return tmp_path_factory.mktemp("tmp_folder")


def test_splitmix64() -> None:
    # Reference outputs of the splitmix64 generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert 0 <= splitmix64(2**70) < 2**64


def test_derive_seed() -> None:
    seeds = [derive_seed(42, k) for k in range(100)]
    assert len(set(seeds)) == 100
    assert all(0 <= s < 2**63 for s in seeds)
    assert derive_seed(42, 3) == derive_seed(42, 3)
    assert derive_seed(42) != derive_seed(43)
    # Usable by numpy
    np.random.default_rng(derive_seed(0, 1)).normal()


def test_complex_pairs() -> None:
    z = np.array([[1 + 2j, -0.5j], [3.0, 0.0]])
    pairs = complex_to_pairs(z)
    assert pairs[0][1] == [0.0, -0.5]
    np.testing.assert_array_equal(pairs_to_complex(pairs), z)
    with pytest.raises(ValueError, match="Expected"):
        pairs_to_complex([[1.0, 2.0, 3.0]])


def test_write_json_is_stable(tmp_folder) -> None:
    a = write_json({"b": 1, "a": [1, 2]}, tmp_folder.joinpath("x", "a.json"))
    b = write_json({"a": [1, 2], "b": 1}, tmp_folder.joinpath("x", "b.json"))
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().endswith("\n")
    assert read_json(a) == {"a": [1, 2], "b": 1}


def test_sidecar_path() -> None:
    assert sidecar_path("runs/panel.csv").name == "panel.json"


def badfname():
    return "#6262%%this?is#\\my=plot*///name(km/h)"


@pytest.mark.parametrize(
    "test_input,repchar,expected",
    [
        (badfname(), " ", "6262 this is my plot name(km h)"),
        (badfname(), "_", "6262_this_is_my_plot_name(km_h)"),
        (badfname(), "-", "6262-this-is-my-plot-name(km-h)"),
        ("radial-13-0-0", "_", "radial-13-0-0"),
    ],
)
def test_replace_bad_path_characters(test_input, repchar, expected):
    assert replace_bad_path_characters(test_input, repchar) == expected
