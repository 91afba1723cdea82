import numpy as np
import pytest

from prionkinetics.exceptions import NegativeSink
from prionkinetics.flow import Domain, SpatialGrid, builtin_field
from prionkinetics.modules import MonomerModule
from prionkinetics.solver import SparseSolver


@pytest.fixture
def homogeneous_monomer(params, lgrid, sgrid, ygrid):
    return MonomerModule(params, lgrid, sgrid, ygrid)


def _cube_monomer(params, lgrid, sgrid, kind):
    grid = SpatialGrid(Domain(kind, 1.0), 4)
    return MonomerModule(params, lgrid, sgrid, grid, solver=SparseSolver(tol=1e-13)), grid


def test_homogeneous_step_formula(homogeneous_monomer):
    u = builtin_field("zero", Domain("homogeneous"))
    dt, sink, phi_prev = 0.1, 0.5, 2.0
    op = homogeneous_monomer.assemble_monomer_operator(u, 0.0, np.array([sink]), dt)
    phi = homogeneous_monomer.solve_monomer_step(op, np.array([phi_prev]) / dt)
    assert phi[0] == pytest.approx(phi_prev / (1.0 + dt * sink), rel=1e-15)
    assert homogeneous_monomer.gradient_energy(phi) == 0.0


def test_negative_sink_rejected(homogeneous_monomer):
    u = builtin_field("zero", Domain("homogeneous"))
    with pytest.raises(NegativeSink):
        homogeneous_monomer.assemble_monomer_operator(u, 0.0, np.array([-1.0]), 0.1)


def test_non_positive_step_rejected(homogeneous_monomer):
    u = builtin_field("zero", Domain("homogeneous"))
    with pytest.raises(ValueError):
        homogeneous_monomer.assemble_monomer_operator(u, 0.0, np.array([0.0]), 0.0)


@pytest.mark.parametrize("kind", ["periodic_cube", "closed_cube"])
def test_transport_conserves_total_and_bounds(params, lgrid, sgrid, kind):
    monomer, grid = _cube_monomer(params, lgrid, sgrid, kind)
    u = builtin_field("taylor_green", grid.domain, amplitude=0.5)
    phi_prev = np.random.default_rng(8).uniform(0.5, 1.5, size=grid.size)
    dt = 0.05
    op = monomer.assemble_monomer_operator(u, dt, np.zeros(grid.size), dt)
    phi = monomer.solve_monomer_step(op, phi_prev / dt)
    assert np.sum(phi) == pytest.approx(np.sum(phi_prev), rel=1e-10)
    assert phi.min() >= phi_prev.min() - 1e-10
    assert phi.max() <= phi_prev.max() + 1e-10


def test_diffusion_reduces_gradient_energy(params, lgrid, sgrid):
    monomer, grid = _cube_monomer(params, lgrid, sgrid, "closed_cube")
    u = builtin_field("zero", grid.domain)
    phi_prev = 1.0 + 0.5 * np.cos(2.0 * np.pi * grid.nodes[:, 0])
    op = monomer.assemble_monomer_operator(u, 0.0, np.zeros(grid.size), 0.1)
    phi = monomer.solve_monomer_step(op, phi_prev / 0.1)
    assert np.sum(phi) == pytest.approx(np.sum(phi_prev), rel=1e-10)
    assert monomer.gradient_energy(phi) < monomer.gradient_energy(phi_prev)
    assert monomer.gradient_energy(np.ones(grid.size)) == 0.0


def test_sink_reduces_concentration(params, lgrid, sgrid):
    monomer, grid = _cube_monomer(params, lgrid, sgrid, "periodic_cube")
    u = builtin_field("zero", grid.domain)
    phi_prev = np.ones(grid.size)
    op = monomer.assemble_monomer_operator(u, 0.0, np.full(grid.size, 2.0), 0.1)
    phi = monomer.solve_monomer_step(op, phi_prev / 0.1)
    assert np.allclose(phi, 1.0 / 1.2, rtol=1e-10)


def test_diffusion_matrix_is_symmetric_with_zero_row_sums(params, lgrid, sgrid):
    monomer, grid = _cube_monomer(params, lgrid, sgrid, "periodic_cube")
    matrix = monomer.diffusion_matrix.toarray()
    assert np.allclose(matrix, matrix.T)
    assert np.allclose(matrix.sum(axis=1), 0.0, atol=1e-12)


@pytest.mark.parametrize("kind", ["periodic_cube", "closed_cube"])
def test_advection_diffusion_rows_vanish_on_constants(params, lgrid, sgrid, kind):
    monomer, grid = _cube_monomer(params, lgrid, sgrid, kind)
    u = builtin_field("taylor_green", grid.domain, amplitude=0.5)
    block = monomer.advection_matrix(u, 0.0) + monomer.diffusion_matrix
    ones = np.ones(grid.size)
    assert np.allclose(block @ ones, 0.0, atol=1e-12)
    # столбцы в сумме дают ноль при любом поле: поток уходит из одной ячейки в соседнюю
    assert np.allclose(ones @ block.toarray(), 0.0, atol=1e-12)


def test_tolerance_is_passed_per_call(params, lgrid, sgrid):
    monomer, grid = _cube_monomer(params, lgrid, sgrid, "periodic_cube")
    u = builtin_field("taylor_green", grid.domain, amplitude=0.5)
    phi_prev = np.random.default_rng(3).uniform(0.5, 1.5, size=grid.size)
    op = monomer.assemble_monomer_operator(u, 0.0, np.full(grid.size, 0.5), 0.05)
    loose = monomer.solve_monomer_step(op, phi_prev / 0.05, tol=1e-8)
    tight = monomer.solve_monomer_step(op, phi_prev / 0.05)
    assert monomer.solver.tol == 1e-13
    assert np.linalg.norm(op @ loose - phi_prev / 0.05) <= 1e-8 * np.linalg.norm(phi_prev / 0.05)
    assert np.allclose(loose, tight, rtol=1e-6)
