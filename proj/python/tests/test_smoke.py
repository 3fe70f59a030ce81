import math

import numpy as np
import pytest

import hswitch


def test_mli_and_units():
    assert hswitch.mli(0.999) == pytest.approx(3.0)
    assert hswitch.mli(1.0) == hswitch.MLI_CAP
    assert hswitch.units_to_ns(hswitch.ns_to_units(2.5)) == pytest.approx(2.5)
    assert hswitch.ns_to_units(1.0) == pytest.approx(16 * math.pi)


def test_preset_and_hamiltonians():
    spec = hswitch.preset("iso_equal", [2])
    assert spec["n_qubits"] == 1
    hs = hswitch.hamiltonians(spec)
    assert len(hs) == 2
    for h in hs:
        assert h.shape == (8, 8)
        assert np.allclose(h, h.conj().T)


def test_unitary_and_fidelity():
    spec = hswitch.preset("dipole_device", [2], seed=7)
    u = hswitch.unitary(spec, [0.3, 0.7, 0.2, 0.5])
    assert np.allclose(u.conj().T @ u, np.eye(8), atol=1e-12)
    w = hswitch.target("Z")
    f = hswitch.unitary_fidelity(u, w)
    assert 0.0 <= f <= 1.0
    assert hswitch.unitary_fidelity(np.kron(w, np.eye(4)), w) == pytest.approx(1.0)


def test_pg_without_bath_reaches_z():
    spec = hswitch.preset("iso_equal", [0])
    r = hswitch.pg_optimize(spec, "Z", depth=10, total_time=10.0, seed=3, iterations=300, batch_size=16, restarts=2)
    assert len(r["durations"]) == 20
    assert sum(r["durations"]) == pytest.approx(10.0)
    assert r["mli"] >= 5.0
    assert all(b >= a for a, b in zip(r["trace"], r["trace"][1:]))


def test_grape_refine_bounds():
    spec = hswitch.preset("iso_equal", [1])
    r = hswitch.grape_refine(spec, "H", [0.3] * 20, max_iterations=200)
    assert r["fidelity"] >= r["initial_fidelity"]
    assert max(abs(c) for c in r["amplitudes"]) <= 1.2 + 1e-12


def test_controllability():
    assert hswitch.lie_algebra_dimension(hswitch.preset("dipole_2qubit", [0, 0]), "two_qubit") == 15
    assert hswitch.lie_algebra_dimension(hswitch.preset("iso_equal", [0]), "two_ham_z_nonuniversal") == 1
    rows = hswitch.controllability_table()
    assert len(rows) == 8
    assert all(r["qubit_controllable"] for r in rows if r["coupling"] == "isotropic")


def test_reduced_dynamics_starts_at_one():
    spec = hswitch.preset("iso_equal", [2])
    p = hswitch.reduced_dynamics(spec, [0.0, 1.0, 2.0])
    assert p[0] == pytest.approx(1.0)


SWEEP = """
schema_version = 1
name = "py"
seed = 5
gate = "Z"

[model]
n_qubits = 1
coupling = "isotropic"
frame = "rotating"
coupling_value = 1.0

[sweep]
T = [2.0, 4.0]
p = [2]
n = [1]

[optimizer]
iterations = 15
batch_size = 4
restarts = 2
"""


def test_run_experiment_roundtrip():
    records = hswitch.run_experiment(SWEEP, jobs=1)
    assert len(records) == 2
    for r in records:
        assert hswitch.reevaluate(r) == pytest.approx(r["fidelity"], abs=1e-12)
    cps = hswitch.critical_points(records)
    assert len(cps) == 1 and cps[0]["n"] == [1]


def test_errors_map_to_value_error():
    with pytest.raises(ValueError):
        hswitch.target("nope")
    with pytest.raises(ValueError):
        hswitch.run_experiment("schema_version = 1\n")
