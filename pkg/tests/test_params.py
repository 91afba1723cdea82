import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prionkinetics.exceptions import (
    BoundViolation,
    ConfigurationError,
    KernelNormalizationFailure,
    MissingField,
    NonPositiveCoefficient,
)
from prionkinetics.params import FragmentationKernel, ScissionRate, evaluate_g, load_params, params_from_mapping
from prionkinetics.registry import ClosureRegistry

SHEAR = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

MINIMAL = """
[model]
tau0 = 0.5
alpha = 1.0
d1 = 1.0
d2 = 0.1
t_final = 2.0

[model.g]
kind = "constant"
g0 = 0.7
"""


def test_load_params_minimal():
    params = load_params(MINIMAL)
    assert params.tau0 == 0.5
    assert params.g_lo == params.g_hi == 0.7
    assert params.c_a == 1.0
    assert params.kernel.kind == "uniform"


def test_missing_model_section():
    with pytest.raises(MissingField):
        load_params("[other]\nx = 1\n")


def test_unparseable_text():
    with pytest.raises(ConfigurationError):
        load_params("[model\n")


@pytest.mark.parametrize("field", ["alpha", "d1", "d2", "t_final"])
def test_non_positive_coefficients(make_params, field):
    with pytest.raises(NonPositiveCoefficient):
        make_params(**{field: 0.0})


def test_negative_tau0_rejected(make_params):
    with pytest.raises(NonPositiveCoefficient):
        make_params(tau0=-1.0)


def test_zero_tau0_allowed(make_params):
    assert make_params(tau0=0.0).tau0 == 0.0


def test_zero_lower_bound_rejected(make_params):
    with pytest.raises(NonPositiveCoefficient):
        make_params(g={"kind": "strain_rate", "g_lo": 0.0, "g_hi": 1.0, "c": 0.1})


def test_inverted_bounds_rejected(make_params):
    with pytest.raises(ConfigurationError):
        make_params(g={"kind": "strain_rate", "g_lo": 2.0, "g_hi": 1.0, "c": 0.1})


def test_unknown_closure(make_params):
    with pytest.raises(ConfigurationError):
        make_params(g={"kind": "no_such_rate"})


def test_strain_rate_at_rest_and_shear(make_params):
    params = make_params(g={"kind": "strain_rate", "g_lo": 1.0, "g_hi": 2.0, "c": 0.5})
    eta = np.array([0.0, 0.0, 1.0])
    assert evaluate_g(params, np.zeros((3, 3)), np.zeros(3), eta) == pytest.approx(1.0)
    # ‖σ + σᵀ‖_F = √2 для простого сдвига
    assert evaluate_g(params, SHEAR, np.zeros(3), eta) == pytest.approx(1.0 + 0.5 * np.sqrt(2.0))


def test_bound_violation_raised(make_params):
    params = make_params(g={"kind": "strain_rate", "g_lo": 1.0, "g_hi": 1.1, "c": 1.0})
    with pytest.raises(BoundViolation):
        evaluate_g(params, 10.0 * SHEAR, np.zeros(3), np.array([1.0, 0.0, 0.0]))


def test_non_unit_eta_rejected(params):
    with pytest.raises(ValueError):
        evaluate_g(params, np.zeros((3, 3)), np.zeros(3), np.array([1.0, 1.0, 0.0]))


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(-2.0, 2.0), min_size=9, max_size=9),
    st.floats(0.0, 2.0 * np.pi),
    st.floats(0.0, np.pi),
)
def test_orientation_rate_within_bounds(entries, phi, theta):
    grad = np.array(entries).reshape(3, 3)
    bound = 1.0 + 0.3 * 2.0 * np.linalg.norm(grad, 2)
    params = params_from_mapping(
        {
            "tau0": 0.1,
            "alpha": 1.0,
            "d1": 1.0,
            "d2": 1.0,
            "t_final": 1.0,
            "g": {"kind": "orientation", "g_lo": 1.0, "g_hi": bound + 1e-9, "c": 0.3},
        }
    )
    eta = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    eta = eta / np.linalg.norm(eta)
    value = evaluate_g(params, grad, np.zeros(3), eta)
    assert params.g_lo <= value <= params.g_hi


def test_a_weight_closures(make_params):
    params = make_params(a_weight={"kind": "rod_mobility"})
    r = np.linspace(0.0, 10.0, 11)
    values = params.a_weight(r)
    assert np.all(values <= params.c_a)
    assert values[0] == params.c_a

    table = make_params(a_weight={"kind": "table", "r": [0.0, 1.0, 2.0], "values": [2.0, 1.0, 0.5]})
    assert table.c_a == 2.0
    assert table.a_weight(np.array([0.5]))[0] == pytest.approx(1.5)


def test_negative_a_weight_rejected(make_params):
    with pytest.raises(NonPositiveCoefficient):
        make_params(a_weight={"kind": "constant", "value": -1.0})


def test_uniform_kernel_density():
    kernel = FragmentationKernel()
    assert kernel.density(1.0, 4.0) == pytest.approx(0.25)
    assert kernel.density(5.0, 4.0) == 0.0
    nodes = np.linspace(0.0, 10.0, 41)
    defects = kernel.check_on_grid(nodes)
    assert defects["normalization"] < 1e-12
    assert defects["symmetry"] < 1e-12


def _uniform_table(nodes):
    n = nodes.size
    values = np.zeros((n, n))
    for k in range(1, n):
        values[: k + 1, k] = 1.0 / nodes[k]
    return values


def test_table_kernel_accepts_normalized_table():
    nodes = np.linspace(0.0, 5.0, 11)
    kernel = FragmentationKernel("table", nodes, _uniform_table(nodes))
    # столбец r' = 0 вырожден и не участвует в интегралах
    assert np.allclose(kernel.moment_matrix(nodes)[:, 1:], FragmentationKernel().moment_matrix(nodes)[:, 1:])


def test_table_kernel_rejects_bad_normalization():
    nodes = np.linspace(0.0, 5.0, 11)
    values = 2.0 * _uniform_table(nodes)
    with pytest.raises(KernelNormalizationFailure):
        FragmentationKernel("table", nodes, values)


def test_table_kernel_rejects_asymmetry():
    nodes = np.linspace(0.0, 4.0, 5)
    values = _uniform_table(nodes)
    # столбец r' = 4: линейно растущая плотность с тем же интегралом
    column = np.array([0.0, 0.5, 1.0, 1.5, 2.0])
    values[:, 4] = column / 4.0
    with pytest.raises(KernelNormalizationFailure):
        FragmentationKernel("table", nodes, values)


def test_registry_lists_builtin_closures():
    assert {"constant", "strain_rate", "orientation"} <= set(ClosureRegistry.names("g"))
    assert {"zero", "linear", "taylor_green"} <= set(ClosureRegistry.names("velocity"))
    with pytest.raises(ValueError):
        ClosureRegistry.register("g", "constant", lambda **_: None)


def test_custom_closure_registration(make_params):
    @ClosureRegistry.closure("g", "test_linear_strain")
    def factory(g_lo, g_hi, c=1.0, **_):
        def func(grad_u, u, eta):
            value = g_lo + c * np.abs(grad_u[..., 0, 1])
            shape = np.broadcast_shapes(grad_u.shape[:-2], u.shape[:-1], eta.shape[:-1])
            return np.broadcast_to(value, shape).copy()
        return ScissionRate("test_linear_strain", float(g_lo), float(g_hi), float(c), func)

    try:
        assert ClosureRegistry.exists("g", "test_linear_strain")
        params = make_params(g={"kind": "test_linear_strain", "g_lo": 1.0, "g_hi": 3.0, "c": 0.5})
        value = evaluate_g(params, 2.0 * SHEAR, np.zeros(3), np.array([1.0, 0.0, 0.0]))
        assert float(value) == pytest.approx(2.0)
    finally:
        ClosureRegistry.unregister("g", "test_linear_strain")

    assert not ClosureRegistry.exists("g", "test_linear_strain")
    with pytest.raises(KeyError):
        ClosureRegistry.get("g", "test_linear_strain")
