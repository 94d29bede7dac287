"""JSON file formats for states, measurements, and assemblages.

Complex matrices are nested row-major arrays of [re, im] pairs; floats are
emitted at full repr precision (17 significant digits), so write/read
round-trips are bit-faithful for the values that matter.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .gaussian import GaussianState
from .qstate import DensityState
from .steering import MeasurementAssemblage, StateAssemblage


class FormatError(ValueError):
    """Malformed or mislabeled state file."""


def matrix_to_json(a: np.ndarray) -> list:
    return [[[float(np.real(x)), float(np.imag(x))] for x in row] for row in np.asarray(a)]


def matrix_from_json(rows) -> np.ndarray:
    try:
        return np.array([[complex(c[0], c[1]) for c in row] for row in rows])
    except (TypeError, IndexError) as exc:
        raise FormatError(f"bad complex matrix payload: {exc}") from exc


def save_density(state: DensityState, path: str) -> None:
    doc = {"kind": "density", "dims": list(state.dims),
           "matrix": matrix_to_json(state.data)}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def save_gaussian(state: GaussianState, path: str) -> None:
    doc = {"kind": "gaussian", "modes_per_party": list(state.modes_per_party),
           "cov": [[float(x) for x in row] for row in state.cov],
           "mean": [float(x) for x in state.mean]}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def _read(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict) or "kind" not in doc:
        raise FormatError(f"{path}: missing 'kind' field")
    return doc


def load_state(path: str) -> DensityState | GaussianState:
    """Load either state flavor, dispatching on the 'kind' field."""
    doc = _read(path)
    if doc["kind"] == "density":
        return DensityState(doc["dims"], matrix_from_json(doc["matrix"]))
    if doc["kind"] == "gaussian":
        return GaussianState(doc["modes_per_party"], np.array(doc["cov"], dtype=float),
                             np.array(doc["mean"], dtype=float))
    raise FormatError(f"{path}: unknown kind {doc['kind']!r}")


def load_density(path: str) -> DensityState:
    state = load_state(path)
    if not isinstance(state, DensityState):
        raise FormatError(f"{path}: expected a density state")
    return state


def load_gaussian(path: str) -> GaussianState:
    state = load_state(path)
    if not isinstance(state, GaussianState):
        raise FormatError(f"{path}: expected a gaussian state")
    return state


def save_measurements(ma: MeasurementAssemblage, path: str) -> None:
    elements = {}
    for i, per_unit in enumerate(ma.povms):
        for x, setting in enumerate(per_unit):
            for a, mat in enumerate(setting):
                elements[f"{i};{x};{a}"] = matrix_to_json(mat)
    doc = {"kind": "measurement", "unit_dims": list(ma.unit_dims),
           "settings": list(ma.settings), "outcomes": list(ma.outcomes),
           "elements": elements}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_measurements(path: str) -> MeasurementAssemblage:
    doc = _read(path)
    if doc["kind"] != "measurement":
        raise FormatError(f"{path}: expected kind 'measurement'")
    dims = [int(d) for d in doc["unit_dims"]]
    settings = [int(s) for s in doc["settings"]]
    outcomes = [int(o) for o in doc["outcomes"]]
    povms = []
    for i in range(len(dims)):
        per_unit = []
        for x in range(settings[i]):
            per_unit.append(tuple(matrix_from_json(doc["elements"][f"{i};{x};{a}"])
                                  for a in range(outcomes[i])))
        povms.append(tuple(per_unit))
    return MeasurementAssemblage(dims, povms)


def save_assemblage(sa: StateAssemblage, path: str) -> None:
    elements = {}
    for (a, x), mat in sa.elements.items():
        key = ",".join(map(str, a)) + ";" + ",".join(map(str, x))
        elements[key] = matrix_to_json(mat)
    doc = {"kind": "assemblage", "trusted_dims": list(sa.trusted_dims),
           "settings": list(sa.settings), "outcomes": list(sa.outcomes),
           "elements": elements}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_assemblage(path: str) -> StateAssemblage:
    doc = _read(path)
    if doc["kind"] != "assemblage":
        raise FormatError(f"{path}: expected kind 'assemblage'")
    elements = {}
    for key, mat in doc["elements"].items():
        a_str, x_str = key.split(";")
        a = tuple(int(s) for s in a_str.split(","))
        x = tuple(int(s) for s in x_str.split(","))
        elements[(a, x)] = matrix_from_json(mat)
    return StateAssemblage(doc["trusted_dims"], doc["settings"], doc["outcomes"],
                           elements)
