import numpy as np
import pytest

from prionkinetics.length import LengthGrid
from prionkinetics.modules import CSV_FIELDS, DiagnosticsModule
from prionkinetics.sphere import SphereGrid

from .conftest import decaying_field


@pytest.fixture
def fine_grids():
    return LengthGrid(3001, 30.0, 1.0), SphereGrid(6, 12)


@pytest.fixture
def diagnostics(params, fine_grids, ygrid):
    lgrid, sgrid = fine_grids
    return DiagnosticsModule(params, lgrid, sgrid, ygrid)


def _isotropic(lgrid, sgrid):
    radial = np.exp(-lgrid.nodes) / (4.0 * np.pi)
    return np.broadcast_to(radial[:, None, None], (lgrid.n_r, sgrid.size, 1)).copy()


def test_empty_polymer_field(diagnostics, fine_grids):
    lgrid, sgrid = fine_grids
    record = diagnostics.compute_diagnostics(np.zeros((lgrid.n_r, sgrid.size, 1)), np.array([0.7]))
    assert record.total_mass == pytest.approx(0.7)
    assert record.monomer_total == pytest.approx(0.7)
    assert record.polymer_mass == 0.0
    assert record.polymer_count == 0.0
    assert np.all(record.stress == 0.0)
    assert record.stress_min_eig == 0.0
    assert np.isnan(record.envelope_margin)


def test_isotropic_stress(diagnostics, fine_grids):
    lgrid, sgrid = fine_grids
    psi = _isotropic(lgrid, sgrid)
    record = diagnostics.compute_diagnostics(psi, np.array([0.0]))
    assert record.polymer_mass == pytest.approx(1.0, rel=1e-4)
    assert record.polymer_count == pytest.approx(1.0, rel=1e-4)
    assert np.allclose(record.stress_mean, 2.0 / 3.0 * np.eye(3), rtol=1e-4, atol=1e-10)
    # след тензора равен второму моменту по длине
    second = diagnostics.polymer_moment(psi, 2)[0]
    assert np.trace(record.stress[0]) == pytest.approx(second, rel=1e-12)


def test_stress_is_positive_semidefinite(params, lgrid, sgrid, ygrid):
    module = DiagnosticsModule(params, lgrid, sgrid, ygrid)
    for seed in range(5):
        psi = decaying_field(lgrid, sgrid, seed=seed)
        assert module.compute_diagnostics(psi, np.array([1.0])).stress_min_eig >= -1e-14


def test_mass_drift_and_envelope_margin(diagnostics, fine_grids):
    lgrid, sgrid = fine_grids
    psi = _isotropic(lgrid, sgrid)
    record = diagnostics.compute_diagnostics(psi, np.array([1.0]), t=0.5, step=3, c_n=1.0, rho_initial=1.0)
    assert record.step == 3 and record.t == 0.5
    assert record.mass_drift == pytest.approx(record.total_mass - 1.0)
    # 1/(4π) < 1: огибающая e^{-r} строго выше ψ везде, кроме r_max
    assert record.envelope_margin >= 0.0
    assert diagnostics.envelope_margin(psi, 0.05) < 0.0


def test_row_follows_csv_fields(diagnostics, fine_grids):
    lgrid, sgrid = fine_grids
    row = diagnostics.compute_diagnostics(_isotropic(lgrid, sgrid), np.array([1.0])).as_row()
    assert tuple(row) == CSV_FIELDS
    assert row["stress_xx"] == pytest.approx(2.0 / 3.0, rel=1e-4)
