"""JSON readers and writers for tensors, decompositions and DODD factors.

Tensor JSON is ``{"shape": [...], "data": [...]}`` with ``data`` in row-major
order. Vector sets are stored column by column: ``vectors[i]`` is the i-th
unit vector.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DimensionError, InvalidTrain
from .tensor import OdecoCarriage, SymmetricCarriage, TrainDecomposition, as_tensor

__all__ = [
    "tensor_to_dict",
    "tensor_from_dict",
    "read_tensor",
    "write_tensor",
    "decomposition_to_dict",
    "decomposition_from_dict",
    "read_json",
    "write_json",
]


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(obj, path):
    """Write ``obj`` as JSON; numpy values are converted, keys are sorted."""
    text = json.dumps(_jsonify(obj), indent=2, sort_keys=True)
    if path == "-":
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def tensor_to_dict(T):
    T = np.asarray(T, dtype=float)
    return {"shape": list(T.shape), "data": T.reshape(-1).tolist()}


def tensor_from_dict(obj):
    """Parse tensor JSON; raises ``DimensionError`` on malformed input."""
    if not isinstance(obj, dict) or "shape" not in obj or "data" not in obj:
        raise DimensionError('tensor JSON needs "shape" and "data" keys')
    shape = obj["shape"]
    if not isinstance(shape, list) or not all(isinstance(s, int) and s >= 1 for s in shape):
        raise DimensionError(f"shape must be a list of positive integers, got {shape!r}")
    return as_tensor(obj["data"], shape)


def read_tensor(path):
    return tensor_from_dict(read_json(path))


def write_tensor(T, path):
    write_json(tensor_to_dict(T), path)


def _columns(M):
    return np.asarray(M).T.tolist()


def _from_columns(cols, what):
    arr = np.asarray(cols, dtype=float)
    if arr.ndim != 2:
        raise InvalidTrain(f"{what} must be a list of equal-length vectors")
    return arr.T


def decomposition_to_dict(decomp: TrainDecomposition):
    cars = []
    for c in decomp.carriages:
        if isinstance(c, OdecoCarriage):
            cars.append(
                {
                    "type": "odeco",
                    "coefficients": c.coefficients.tolist(),
                    "vectorsA": _columns(c.vectors_a),
                    "vectorsB": _columns(c.vectors_b),
                    "vectorsC": _columns(c.vectors_c),
                }
            )
        else:
            cars.append(
                {
                    "type": "symmetric",
                    "coefficients": c.coefficients.tolist(),
                    "vectors": _columns(c.vectors),
                    "orthogonal": bool(c.orthogonal),
                }
            )
    return {
        "carriages": cars,
        "contractedEdges": decomp.contracted_edges,
        "meta": _jsonify(decomp.meta),
    }


def decomposition_from_dict(obj) -> TrainDecomposition:
    try:
        cars = []
        for c in obj["carriages"]:
            if c.get("type", "symmetric") == "odeco":
                cars.append(
                    OdecoCarriage(
                        c["coefficients"],
                        _from_columns(c["vectorsA"], "vectorsA"),
                        _from_columns(c["vectorsB"], "vectorsB"),
                        _from_columns(c["vectorsC"], "vectorsC"),
                    )
                )
            else:
                cars.append(
                    SymmetricCarriage(
                        c["coefficients"],
                        _from_columns(c["vectors"], "vectors"),
                        orthogonal=c.get("orthogonal", True),
                    )
                )
        return TrainDecomposition(
            cars, contracted_edges=obj.get("contractedEdges", 1), meta=obj.get("meta", {})
        )
    except (KeyError, TypeError) as exc:
        raise InvalidTrain(f"malformed decomposition JSON: {exc}") from exc
