import numpy as np
import pytest

from prionkinetics.exceptions import NegativeMonomerInput, TimestepTooLarge
from prionkinetics.flow import FlowMap
from prionkinetics.length import weighted_norm_sq
from prionkinetics.modules import PolymerModule
from prionkinetics.solver import SparseSolver
from prionkinetics.sphere import SphereGrid

from .conftest import decaying_field

SHEAR = np.array([[[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]])


@pytest.fixture
def small_sphere():
    return SphereGrid(2, 4)


@pytest.fixture
def polymer(params, lgrid, small_sphere, ygrid):
    return PolymerModule(params, lgrid, small_sphere, ygrid, solver=SparseSolver(tol=1e-12))


def _assemble(polymer, grad=SHEAR, phi=1.0, g=1.0, dt=0.01, **kwargs):
    g_field = np.full((polymer.sgrid.size, 1), g)
    return polymer.assemble_polymer_operator(grad, np.array([phi]), g_field, dt, **kwargs)


def test_stability_conditions_checked(polymer):
    with pytest.raises(TimestepTooLarge):
        _assemble(polymer, k2=100.0, dt=0.01)
    with pytest.raises(TimestepTooLarge):
        _assemble(polymer, k3=150.0, dt=0.01)
    _assemble(polymer, k2=50.0, k3=50.0, dt=0.01)


def test_negative_monomer_input_rejected(polymer):
    with pytest.raises(NegativeMonomerInput):
        _assemble(polymer, phi=-0.5)


def test_operator_is_m_matrix(polymer):
    op = _assemble(polymer)
    matrix = op.matrices[0].toarray()
    off = matrix - np.diag(np.diag(matrix))
    assert np.all(off <= 1e-12)
    inverse = np.linalg.inv(matrix)
    assert np.min(inverse) >= -1e-12 * np.max(np.abs(inverse))


def test_step_preserves_positivity(polymer, lgrid, small_sphere):
    op = _assemble(polymer)
    psi_prev = decaying_field(lgrid, small_sphere, seed=1)
    g_field = np.ones((small_sphere.size, 1))
    rhs = polymer.polymer_rhs(psi_prev, FlowMap.identity(np.zeros((1, 3))), g_field, op.dt)
    psi = polymer.solve_polymer_step(op, rhs)
    assert psi.shape == psi_prev.shape
    assert np.all(psi[0] == 0.0) and np.all(psi[-1] == 0.0)
    assert psi.min() >= -1e-12 * psi.max()


def test_coercivity_witness_positive(polymer):
    op = _assemble(polymer)
    assert polymer.coercivity_witness(op, samples=8) > 0.0


def test_operator_apply_matches_matrices(polymer, lgrid, small_sphere):
    op = _assemble(polymer)
    psi = decaying_field(lgrid, small_sphere, seed=2)[lgrid.interior]
    applied = op.apply(psi)
    assert np.allclose(applied[:, :, 0].ravel(), op.matrices[0] @ psi[:, :, 0].ravel())


def test_isotropic_step_without_transport(make_params, lgrid, small_sphere, ygrid):
    params = make_params(tau0=0.0)
    polymer = PolymerModule(params, lgrid, small_sphere, ygrid, solver=SparseSolver(tol=1e-13))
    dt, g = 0.05, 0.8
    op = polymer.assemble_polymer_operator(np.zeros((1, 3, 3)), np.array([1.0]), g, dt, eps=0.0)
    r = lgrid.nodes
    radial = r * np.exp(-2.0 * r)
    radial[-1] = 0.0
    psi_prev = np.broadcast_to(radial[:, None, None], (lgrid.n_r, small_sphere.size, 1)).copy()
    rhs = polymer.polymer_rhs(psi_prev, FlowMap.identity(np.zeros((1, 3))), g, dt)
    psi = polymer.solve_polymer_step(op, rhs)
    tail = polymer.fragmentation.gain(psi_prev, g)
    expected = (psi_prev / dt + tail) / (1.0 / dt + g * r[:, None, None])
    interior = lgrid.interior
    assert np.allclose(psi[interior], expected[interior], rtol=1e-9, atol=1e-14)


def test_default_regularization(polymer, lgrid):
    assert polymer.default_eps() == pytest.approx(lgrid.dr ** 2)
    op = _assemble(polymer)
    assert op.eps == pytest.approx(lgrid.dr ** 2)
    assert op.block_size == lgrid.n_interior * 8


def test_manufactured_solution_recovered(polymer, lgrid, small_sphere):
    op = _assemble(polymer)
    interior = lgrid.interior
    exact = decaying_field(lgrid, small_sphere, seed=5)
    rhs = np.zeros_like(exact)
    rhs[interior] = op.apply(exact[interior])
    tol = 1e-12
    psi = polymer.solve_polymer_step(op, rhs, tol=tol)
    residual = np.linalg.norm(op.apply(psi[interior]) - rhs[interior])
    assert residual <= tol * np.linalg.norm(rhs[interior])
    # ошибка <= κ(A)·невязка
    condition = np.linalg.cond(op.matrices[0].toarray())
    error = np.linalg.norm(psi - exact) / np.linalg.norm(exact)
    assert error <= 10.0 * tol * condition
    assert np.all(psi[0] == 0.0) and np.all(psi[-1] == 0.0)


def test_regularization_perturbs_step_linearly_in_eps(polymer, lgrid, small_sphere):
    psi_prev = decaying_field(lgrid, small_sphere, seed=6)
    g_field = np.ones((small_sphere.size, 1))

    def step(eps):
        op = _assemble(polymer, eps=eps)
        rhs = polymer.polymer_rhs(psi_prev, FlowMap.identity(np.zeros((1, 3))), g_field, op.dt)
        return polymer.solve_polymer_step(op, rhs)

    unregularized = step(0.0)
    eps0 = polymer.default_eps()
    differences = [
        np.sqrt(weighted_norm_sq(step(eps) - unregularized, "L2alpha", lgrid, small_sphere))
        for eps in (eps0, eps0 / 2.0, eps0 / 4.0)
    ]
    scale = np.sqrt(weighted_norm_sq(unregularized, "L2alpha", lgrid, small_sphere))
    assert differences[0] <= 0.1 * scale
    for coarse, fine in zip(differences, differences[1:]):
        assert 1.8 <= coarse / fine <= 2.2
