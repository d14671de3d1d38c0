"""JSON schema ``tcd-cov/1`` for covariances and unitary ensembles.

Complex matrices are nested row-major lists of ``[re, im]`` pairs::

    {"version": "tcd-cov/1", "kind": "covariance", "M": 2,
     "trace_normalized": true, "entries": [[[1, 0], [0.5, 0]], ...]}

    {"version": "tcd-cov/1", "kind": "unitary_ensemble", "M": 8, "G": 4, "r": 2,
     "groups": [{"basis": [...], "eigenvalues": [4.0, 4.0]}, ...]}
"""

import json

import numpy as np

from ..errors import InvalidInputError
from .covariance import CovarianceMatrix, GroupEigenStructure
from .ensemble import UnitaryEnsemble

SCHEMA_VERSION = "tcd-cov/1"


def encode_complex(A):
    A = np.asarray(A, dtype=complex)
    return np.stack([A.real, A.imag], axis=-1).tolist()


def decode_complex(data):
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise InvalidInputError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def to_dict(obj):
    """Encode a ``CovarianceMatrix`` or ``UnitaryEnsemble``."""
    if isinstance(obj, CovarianceMatrix):
        return {
            "version": SCHEMA_VERSION,
            "kind": "covariance",
            "M": obj.M,
            "trace_normalized": obj.trace_normalized,
            "entries": encode_complex(obj.entries),
        }
    if isinstance(obj, UnitaryEnsemble):
        return {
            "version": SCHEMA_VERSION,
            "kind": "unitary_ensemble",
            "M": obj.M,
            "G": obj.G,
            "r": obj.r,
            "groups": [
                {"basis": encode_complex(g.basis), "eigenvalues": g.eigenvalues.tolist()}
                for g in obj.groups
            ],
        }
    raise InvalidInputError(f"cannot serialize {type(obj).__name__}")


def from_dict(data):
    if data.get("version") != SCHEMA_VERSION:
        raise InvalidInputError(f"unsupported schema version {data.get('version')!r}")
    kind = data.get("kind")
    if kind == "covariance":
        return CovarianceMatrix(decode_complex(data["entries"]), bool(data.get("trace_normalized", True)))
    if kind == "unitary_ensemble":
        return UnitaryEnsemble(
            tuple(
                GroupEigenStructure(decode_complex(g["basis"]), np.asarray(g["eigenvalues"], dtype=float))
                for g in data["groups"]
            )
        )
    raise InvalidInputError(f"unknown kind {kind!r}")


def dumps(obj, **kwargs):
    return json.dumps(to_dict(obj), **kwargs)


def loads(text):
    return from_dict(json.loads(text))
