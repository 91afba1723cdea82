import numpy as np
import pytest

from prionkinetics.config import config_from_mapping, load_config
from prionkinetics.exceptions import ConfigurationNotDegenerate, TimestepTooLarge
from prionkinetics.greer import (
    GreerState,
    compare_with_full,
    degeneracy_violations,
    greer_from_config,
    greer_ledger,
    greer_step,
    run_greer,
)

from .conftest import CONFIGS, config_mapping


def _state(tau0=0.0, g0=1.0, phi=1.0, n=3001):
    r = np.linspace(0.0, 30.0, n)
    f = r * np.exp(-r)
    f[-1] = 0.0
    return GreerState(f=f, phi=phi, tau0=tau0, g0=g0, r=r, alpha=1.0)


def test_full_solver_matches_reduced_system():
    config = load_config(CONFIGS / "greer.toml")
    result = compare_with_full(config)
    assert len(result["discrepancies"]) == 100
    assert result["max_discrepancy"] <= 1e-8
    assert result["reference"].step == 100


def test_non_degenerate_configuration_rejected():
    config = load_config(CONFIGS / "shear.toml")
    reasons = degeneracy_violations(config)
    assert len(reasons) == 3
    with pytest.raises(ConfigurationNotDegenerate):
        greer_from_config(config)


def test_count_production_rate():
    state = _state()
    dt = 1e-3
    after = greer_step(state, dt)
    # d/dt ∫f = g₀∫ r f = 2 для f = r e^{-r}
    rate = (after.count() - state.count()) / dt
    assert rate == pytest.approx(2.0, rel=0.05)
    assert after.t == pytest.approx(dt)
    assert after.step == 1


def _relative_drift(states):
    return abs(states[-1].mass() - states[0].mass()) / states[0].mass()


def _run_state(state, dt, n_steps):
    states = [state]
    for _ in range(n_steps):
        states.append(greer_step(states[-1], dt))
    return states


def test_reduced_mass_nearly_conserved():
    # n_r = 256, Δt = 1e-3, T = 1
    config = load_config(CONFIGS / "mass_conservation.toml")
    states = run_greer(config)
    assert states[-1].t == pytest.approx(1.0)
    assert _relative_drift(states) <= 1e-3
    assert all(s.phi > 0.0 for s in states)
    assert all(np.all(s.f >= -1e-14) for s in states)


def test_reduced_mass_drift_halves_with_step():
    coarse = _relative_drift(_run_state(_state(tau0=0.5, n=301), 1e-3, 1000))
    fine = _relative_drift(_run_state(_state(tau0=0.5, n=601), 5e-4, 2000))
    assert fine <= 1e-3
    assert 1.6 <= coarse / fine <= 2.4


def test_full_solver_matches_reduced_system_without_polymerization():
    config = config_from_mapping(config_mapping("greer", model={"tau0": 0.0}))
    result = compare_with_full(config)
    assert result["max_discrepancy"] <= 1e-10
    assert result["reference"].phi == pytest.approx(1.0)


def test_oversized_step_rejected():
    state = _state(tau0=10.0, phi=10.0)
    k1, k2 = greer_ledger(state)
    assert k1 == 2.0 and k2 == 100.0
    with pytest.raises(TimestepTooLarge):
        greer_step(state, 0.01)


def test_run_greer_returns_all_states():
    config = load_config(CONFIGS / "greer.toml")
    states = run_greer(config, n_steps=5)
    assert [s.step for s in states] == list(range(6))
    assert states[0].f.shape == (config.length.n_r,)
