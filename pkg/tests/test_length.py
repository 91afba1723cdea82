import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prionkinetics.exceptions import ConfigurationError, TruncationTail
from prionkinetics.length import LengthGrid, tail_integral, total_integral, upwind_dr, weighted_norm_sq
from prionkinetics.sphere import SphereGrid

from .conftest import decaying_field


def test_truncation_too_short_rejected():
    with pytest.raises(ConfigurationError):
        LengthGrid(100, 20.0, 1.0)


def test_too_few_nodes_rejected():
    with pytest.raises(ConfigurationError):
        LengthGrid(3, 30.0, 1.0)


def test_nodes_and_weights():
    grid = LengthGrid(31, 30.0, 1.0)
    assert grid.dr == pytest.approx(1.0)
    assert grid.nodes[0] == 0.0 and grid.nodes[-1] == 30.0
    assert grid.weights.sum() == pytest.approx(30.0)
    assert grid.n_interior == 29
    assert grid.nodes[grid.interior].size == grid.n_interior


def test_quadrature_defect_on_fine_grid():
    grid = LengthGrid(20001, 23.0, 1.0)
    assert grid.quadrature_defect <= 1e-6


def test_quadrature_defect_warning_on_coarse_grid(caplog):
    with caplog.at_level(logging.WARNING, logger="prionkinetics.length"):
        grid = LengthGrid(64, 30.0, 1.0)
    assert grid.quadrature_defect > 1e-6
    assert any("Дефект квадратуры" in record.message for record in caplog.records)


def test_tail_integral_of_exponential():
    grid = LengthGrid(3001, 30.0, 1.0)
    psi = np.exp(-grid.nodes)
    tail = tail_integral(psi, grid)
    exact = np.exp(-grid.nodes) - np.exp(-30.0)
    assert np.allclose(tail[:-1000], exact[:-1000], rtol=1e-4)
    assert tail[-1] == 0.0
    assert tail_integral(psi, grid, index=0) == pytest.approx(1.0, rel=1e-4)


def test_tail_integral_is_monotone_for_nonnegative_fields():
    grid = LengthGrid(200, 30.0, 1.0)
    psi = grid.nodes * np.exp(-grid.nodes)
    tail = tail_integral(psi, grid)
    assert np.all(np.diff(tail) <= 0.0)


def test_tail_integral_rejects_non_decaying_field():
    grid = LengthGrid(64, 30.0, 1.0)
    with pytest.raises(TruncationTail):
        tail_integral(np.ones(grid.n_r), grid)


def test_tail_integral_broadcasts_trailing_axes():
    grid = LengthGrid(101, 30.0, 1.0)
    base = np.exp(-grid.nodes)
    psi = base[:, None, None] * np.array([1.0, 2.0])[None, :, None] * np.ones(3)[None, None, :]
    tail = tail_integral(psi, grid)
    assert tail.shape == psi.shape
    assert np.allclose(tail[:, 1, :], 2.0 * tail[:, 0, :])


def test_total_integral_of_isotropic_exponential():
    grid = LengthGrid(3001, 30.0, 1.0)
    sphere = SphereGrid(4, 8)
    psi = np.exp(-grid.nodes)[:, None, None] / (4.0 * np.pi) * np.ones((1, sphere.size, 2))
    total = total_integral(psi, grid, sphere)
    assert total.shape == (2,)
    assert np.allclose(total, 1.0, rtol=1e-4)


def test_upwind_derivative_first_order():
    errors = []
    for n in (1501, 3001):
        grid = LengthGrid(n, 30.0, 1.0)
        r = grid.nodes
        psi = r * np.exp(-r)
        exact = (1.0 - r) * np.exp(-r)
        diff = upwind_dr(psi, grid)[1:] - exact[1:]
        errors.append(np.max(np.abs(diff)))
    assert 1.7 <= errors[0] / errors[1] <= 2.3


def test_weighted_norms():
    grid = LengthGrid(3001, 30.0, 1.0)
    sphere = SphereGrid(4, 8)
    f = np.exp(-grid.nodes)[:, None, None] * np.ones((1, sphere.size, 1))
    l2 = weighted_norm_sq(f, "L2alpha", grid, sphere)
    # ∫ e^{r} e^{-2r} dr · 4π
    assert l2 == pytest.approx(4.0 * np.pi, rel=1e-4)
    v = weighted_norm_sq(f, "V", grid, sphere)
    v1 = weighted_norm_sq(f, "V1", grid, sphere)
    assert l2 <= v <= v1
    assert weighted_norm_sq(f, "L2alpha", grid, sphere, cell_volume=0.5) == pytest.approx(0.5 * l2)


def test_weighted_norm_unknown_kind():
    grid = LengthGrid(64, 30.0, 1.0)
    sphere = SphereGrid(2, 4)
    with pytest.raises(ValueError):
        weighted_norm_sq(np.zeros((64, sphere.size, 1)), "H1", grid, sphere)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_tail_integral_fubini_identity(seed):
    # ∫ Λ₂[ψ] dr = ∫ r ψ dr; на трапециях равенство точное при ψ(0) = ψ(r_max) = 0
    grid = LengthGrid(128, 30.0, 1.0)
    sphere = SphereGrid(2, 4)
    psi = decaying_field(grid, sphere, n_y=3, seed=seed)
    tail = tail_integral(psi, grid)
    lhs = np.tensordot(grid.weights, tail, axes=(0, 0))
    rhs = np.tensordot(grid.weights * grid.nodes, psi, axes=(0, 0))
    assert np.allclose(lhs, rhs, rtol=1e-8, atol=1e-8)
    assert np.allclose(tail[0], np.tensordot(grid.weights, psi, axes=(0, 0)), rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.sampled_from([0, 1]))
def test_weighted_l2_controls_moments(seed, theta):
    grid = LengthGrid(128, 30.0, 1.0)
    sphere = SphereGrid(2, 4)
    cell_volume = 0.125
    # знакопеременное гладкое поле
    psi = decaying_field(grid, sphere, n_y=2, seed=seed) - decaying_field(grid, sphere, n_y=2, seed=seed + 1)
    moment = np.einsum("r,e,rey->", grid.weights * grid.nodes ** theta, sphere.weights, np.abs(psi)) * cell_volume
    norm = np.sqrt(weighted_norm_sq(psi, "L2alpha", grid, sphere, cell_volume=cell_volume))
    constant = np.sqrt(
        float(grid.weights @ (grid.nodes ** (2 * theta) * np.exp(-grid.alpha * grid.nodes)))
        * float(sphere.weights.sum())
        * 2
        * cell_volume
    )
    assert moment <= constant * norm * (1.0 + 1e-12)
