"""
Utilities shared by the phasetopo modules.

Typing aliases, reproducible seed derivation and JSON helpers.
"""

import json
import re
from pathlib import Path
from typing import Any, List, Sequence, Union

import numpy as np
import numpy.typing as npt

# pylint: disable=C0103 # does not confrom to snake case naming style

# Define some types for numpy
NDArrayFloat = npt.NDArray[np.float64]
NDArrayComplex = npt.NDArray[np.complex128]
NDArrayInt = npt.NDArray[np.int64]

_MASK64: int = 0xFFFFFFFFFFFFFFFF


def splitmix64(value: int) -> int:
    """
    Mix a 64 bits integer with the splitmix64 finalizer.

    Parameters
    ----------
    value : int
        Any integer, reduced modulo 2**64.

    Returns
    -------
    int
        The mixed value in [0, 2**64).
    """
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, stream: int = 0) -> int:
    """
    Derive an independent child seed from a master seed and a stream number.

    Used to give every trial, and every random stage of a trial (network,
    injections, noise, phase scrambling), its own reproducible generator.

    Parameters
    ----------
    seed : int
        Master seed.
    stream : int, optional
        Stream offset. The default is 0.

    Returns
    -------
    int
        Child seed in [0, 2**63), suitable for :func:`numpy.random.default_rng`.
    """
    return splitmix64(splitmix64(seed) + stream) >> 1


def complex_to_pairs(matrix: npt.ArrayLike) -> List[Any]:
    """Convert a complex array to nested lists of ``[re, im]`` pairs."""
    arr = np.asarray(matrix, dtype=np.complex128)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def pairs_to_complex(pairs: Sequence[Any]) -> NDArrayComplex:
    """Convert nested lists of ``[re, im]`` pairs back to a complex array."""
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.shape[-1] != 2:
        raise ValueError(
            f"Expected [re, im] pairs in the last dimension, got shape {arr.shape}!"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def write_json(obj: Any, fpath: Union[str, Path]) -> Path:
    """
    Write an object as JSON with sorted keys.

    The output is byte-identical for identical objects.

    Parameters
    ----------
    obj : Any
        JSON serializable object.
    fpath : Union[str, Path]
        Target file. Parent directories are created.

    Returns
    -------
    Path
        The written path.
    """
    _fpath = Path(fpath)
    _fpath.parent.mkdir(parents=True, exist_ok=True)
    _fpath.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return _fpath


def read_json(fpath: Union[str, Path]) -> Any:
    """Read a JSON file."""
    return json.loads(Path(fpath).read_text())


def sidecar_path(fpath: Union[str, Path]) -> Path:
    """Return the JSON sidecar path associated with a data file."""
    return Path(fpath).with_suffix(".json")


def replace_bad_path_characters(filename: str, repchar: str = "_") -> str:
    """
    Make filename compatible with path by replacement.

    Replace anything that isn't alphanumeric, -, _, a space, or a period.
    Note that leading and trailing white spaces and replacement characters
    are also removed. Used to derive output file names from network names.

    Parameters
    ----------
    filename : str
        Old filename.
    repchar : str, optional
        The string to replace the bad values with. The default is "_".

    Returns
    -------
    str
        New filename.

    """
    return re.sub(r"[^\w\-_\. \[\]\(\)]+", repchar, filename).strip(f" {repchar}")
