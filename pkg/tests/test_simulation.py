import logging

import numpy as np
import pytest

from prionkinetics.config import config_from_mapping, load_config
from prionkinetics.exceptions import InvariantBreach, TimestepTooLarge
from prionkinetics.length import LengthGrid
from prionkinetics.simulation import (
    Simulator,
    check_initial_envelope,
    envelope_constant,
    orientation_density,
)
from prionkinetics.sphere import SphereGrid
from prionkinetics.storage import read_diagnostics, read_snapshot

from .conftest import CONFIGS, config_mapping


def _final_drift(config):
    with Simulator(config, write_outputs=False) as sim:
        artifacts = sim.run()
    return artifacts.records[-1].mass_drift


def test_mass_drift_is_small_and_first_order():
    config = config_from_mapping(config_mapping("mass_conservation", output={"strict": False, "cadence": 1000}))
    coarse = _final_drift(config)
    fine = _final_drift(config.refined(1))
    assert abs(coarse) <= 1e-3
    assert 1.4 <= abs(coarse) / abs(fine) <= 2.6


def test_oversized_step_rejected_before_first_step():
    config = load_config(CONFIGS / "stability_reject.toml")
    with pytest.raises(TimestepTooLarge):
        Simulator(config, write_outputs=False)


def test_zero_polymers_stay_zero(make_config):
    config = make_config(initial={"psi": "zero"})
    with Simulator(config, write_outputs=False) as sim:
        artifacts = sim.run()
    assert artifacts.ledger.c0 == 0.0
    assert np.all(artifacts.final.psi == 0.0)
    assert artifacts.final.phi == pytest.approx(np.array([1.0]), rel=1e-14)


def test_runs_are_bit_identical(make_config):
    results = []
    for _ in range(2):
        with Simulator(make_config(), write_outputs=False) as sim:
            results.append(sim.run().final)
    assert np.array_equal(results[0].psi, results[1].psi)
    assert np.array_equal(results[0].phi, results[1].phi)


def test_ledger_recursion_matches_closed_form(make_config):
    with Simulator(make_config(), write_outputs=False) as sim:
        artifacts = sim.run()
    ledger = artifacts.ledger
    assert len(ledger.history) == 11
    for n, value in enumerate(ledger.history):
        assert value == pytest.approx(ledger.closed_form(n), rel=1e-12)
    assert ledger.cn <= ledger.c_inf
    assert ledger.k2 * ledger.dt < 1.0 and ledger.k3 * ledger.dt < 1.0


def test_shear_run_keeps_invariants():
    config = load_config(CONFIGS / "shear.toml")
    with Simulator(config, write_outputs=False) as sim:
        artifacts = sim.run()
    assert artifacts.final.step == 500
    assert artifacts.breaches == []
    psi = artifacts.final.psi
    assert np.linalg.norm(np.minimum(psi, 0.0)) <= 1e-10 * np.linalg.norm(psi)
    for record in artifacts.records:
        assert record.envelope_margin >= -1e-8
        assert record.stress_min_eig >= -1e-12
    # простой сдвиг создает касательное напряжение
    assert artifacts.records[-1].stress_mean[0, 1] != 0.0


def test_taylor_green_run_writes_snapshots(output_dir):
    config = load_config(CONFIGS / "taylor_green.toml")
    with Simulator(config) as sim:
        artifacts = sim.run()
    assert artifacts.final.step == 10
    names = sorted(path.name for path in artifacts.snapshots)
    assert names == ["snapshot_000000.pksn", "snapshot_000005.pksn", "snapshot_000010.pksn"]
    snapshot = read_snapshot(output_dir / "snapshot_000010.pksn", expected_hash=config.hash)
    assert np.array_equal(snapshot.psi, artifacts.final.psi)
    assert np.array_equal(snapshot.phi, artifacts.final.phi)
    assert abs(artifacts.records[-1].mass_drift) <= 1e-2


def test_outputs_written_with_provenance(make_config, output_dir):
    config = make_config()
    with Simulator(config) as sim:
        artifacts = sim.run()
    assert artifacts.diagnostics_path == output_dir / "diagnostics.csv"
    found, rows = read_diagnostics(artifacts.diagnostics_path, expected_hash=config.hash)
    assert found == config.hash
    assert [row["step"] for row in rows] == list(range(11))
    assert rows[0]["mass_drift"] == 0.0
    assert [path.name for path in artifacts.snapshots] == ["snapshot_000010.pksn"]


def test_steps_generator_and_ledger_limit(make_config):
    with Simulator(make_config(), write_outputs=False) as sim:
        states = list(sim.steps(n_steps=3))
        assert [state.step for state in states] == [0, 1, 2, 3]
        assert states[-1].t == pytest.approx(0.03)
    with Simulator(make_config(), write_outputs=False) as sim:
        with pytest.raises(TimestepTooLarge):
            next(sim.steps(n_steps=11))


def test_strict_mode_raises_on_breach(make_config, monkeypatch):
    with Simulator(make_config(), write_outputs=False) as sim:
        monkeypatch.setattr(sim, "check_invariants", lambda state: [("psi_envelope", 1.0)])
        with pytest.raises(InvariantBreach) as info:
            sim.run()
    assert info.value.name == "psi_envelope"
    assert info.value.step == 0


def test_lenient_mode_records_breaches(make_config, monkeypatch, caplog):
    config = make_config(output={"strict": False})
    with Simulator(config, write_outputs=False) as sim:
        monkeypatch.setattr(sim, "check_invariants", lambda state: [("phi_bounds", 0.5)])
        with caplog.at_level(logging.WARNING, logger="prionkinetics"):
            artifacts = sim.run()
    assert len(artifacts.breaches) == 11
    assert artifacts.breaches[0] == ("phi_bounds", 0, 0.5)


def test_rho0_mismatch_warns(make_config, caplog):
    config = make_config(model={"rho0": 5.0})
    with caplog.at_level(logging.WARNING, logger="prionkinetics"):
        with Simulator(config, write_outputs=False) as sim:
            sim.run()
    assert any("rho0" in record.message for record in caplog.records)


def test_initial_envelope_checks():
    lgrid = LengthGrid(31, 30.0, 1.0)
    envelope = np.exp(-lgrid.nodes)

    below = check_initial_envelope(0.5 * envelope, 1.0, 1.0, lgrid)
    assert below.passed
    assert below.witness_r == 30.0

    tied = check_initial_envelope(1.0 * np.exp(-lgrid.nodes), 1.0, 1.0, lgrid)
    assert tied.passed
    assert tied.max_violation == 0.0
    assert tied.witness_r == 30.0

    spiked = 0.5 * envelope
    spiked[10] = 2.0 * envelope[10]
    above = check_initial_envelope(spiked, 1.0, 1.0, lgrid)
    assert not above.passed
    assert above.witness == (10,)
    assert above.max_violation == pytest.approx(envelope[10])

    negative = -0.1 * envelope
    assert not check_initial_envelope(negative, 1.0, 1.0, lgrid).passed


def test_envelope_constant_is_minimal():
    lgrid = LengthGrid(31, 30.0, 1.0)
    psi0 = 0.1 * lgrid.nodes * np.exp(-2.0 * lgrid.nodes)
    c0 = envelope_constant(psi0, 1.0, lgrid)
    assert c0 == pytest.approx(0.1 / np.e)
    assert check_initial_envelope(psi0, c0, 1.0, lgrid).passed
    assert not check_initial_envelope(psi0, 0.99 * c0, 1.0, lgrid).passed


def test_valid_config_passes_initial_envelope(make_config):
    for orientation in ("uniform", "aligned"):
        config = make_config(initial={"orientation": orientation, "anisotropy": 2.0, "axis": [1.0, 0.0, 0.0]})
        with Simulator(config, write_outputs=False) as sim:
            assert sim.initial_envelope.passed
            assert sim.initial_envelope.max_violation <= 1e-12 * sim.ledger.c0


def test_envelope_constant_with_orientation_factor():
    lgrid = LengthGrid(64, 30.0, 1.0)
    sgrid = SphereGrid(4, 8)
    radial = 0.1 * lgrid.nodes * np.exp(-2.0 * lgrid.nodes)
    radial[-1] = 0.0
    p = orientation_density(sgrid, "aligned", 2.0, (1.0, 0.0, 0.0))
    psi0 = np.outer(radial, p)[:, :, None]
    c0 = envelope_constant(psi0, 1.0, lgrid)
    assert check_initial_envelope(psi0, c0, 1.0, lgrid).passed
    assert not check_initial_envelope(psi0, (1.0 - 1e-9) * c0, 1.0, lgrid).passed


def test_orientation_density_normalized():
    sgrid = SphereGrid(6, 12)
    for kind, b in (("uniform", 0.0), ("aligned", 3.0)):
        p = orientation_density(sgrid, kind, b, (1.0, 0.0, 0.0))
        assert sgrid.integrate(p) == pytest.approx(1.0, abs=1e-14)
        assert np.all(p > 0.0)
