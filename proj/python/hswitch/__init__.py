"""Gate optimization for a qubit coupled to a small spin bath by switching between fixed Hamiltonians."""

import json

from . import _core
from ._core import (
    MLI_CAP,
    ConfigError,
    DimensionError,
    Error,
    InvalidArgument,
    controllability_table,
    mli,
    ns_to_units,
    partial_trace,
    recursion_determinant,
    recursion_rows,
    target,
    trace_norm,
    unitary_fidelity,
    units_to_ns,
)

__all__ = [
    "MLI_CAP",
    "ConfigError",
    "DimensionError",
    "Error",
    "InvalidArgument",
    "controllability_table",
    "critical_points",
    "grape_refine",
    "hamiltonians",
    "lie_algebra_dimension",
    "lindblad_operators",
    "mli",
    "ns_to_units",
    "partial_trace",
    "pg_optimize",
    "preset",
    "recursion_determinant",
    "recursion_rows",
    "reduced_dynamics",
    "reevaluate",
    "run_experiment",
    "target",
    "trace_norm",
    "unitary",
    "unitary_fidelity",
    "units_to_ns",
]


def _spec(spec):
    return spec if isinstance(spec, str) else json.dumps(spec)


def preset(name, bath_counts=(2,), seed=0):
    """Model spec dict for a named preset ("iso_equal", "iso_variable", "dipole_device", "dipole_2qubit")."""
    return json.loads(_core.preset_json(name, list(bath_counts), seed))


def hamiltonians(spec, ansatz="two_ham_x"):
    return _core.hamiltonians(_spec(spec), ansatz)


def lindblad_operators(spec):
    return _core.lindblad_operators(_spec(spec))


def unitary(spec, durations, ansatz="two_ham_x"):
    return _core.unitary(_spec(spec), ansatz, list(durations))


def pg_optimize(spec, gate, depth, total_time, seed, **kwargs):
    return _core.pg_optimize(_spec(spec), gate, depth, total_time, seed, **kwargs)


def grape_refine(spec, gate, durations, **kwargs):
    return _core.grape_refine(_spec(spec), gate, list(durations), **kwargs)


def lie_algebra_dimension(spec, ansatz="two_ham_x"):
    return _core.lie_algebra_dimension(_spec(spec), ansatz)


def reduced_dynamics(spec, t_grid):
    return _core.reduced_dynamics(_spec(spec), list(t_grid))


def run_experiment(toml_text, jobs=None):
    """Runs a sweep described by a TOML config string and returns the records as dicts."""
    return json.loads(_core.run_experiment_json(toml_text, jobs))


def critical_points(records):
    return json.loads(_core.critical_points_json(json.dumps(records)))


def reevaluate(record):
    return _core.reevaluate_json(json.dumps(record))
