import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density
from qamp.hilbert import AtomStateSpec, FieldStateSpec, build_joint_state, partial_trace, von_neumann_entropy
from qamp.integrate import IntegratorConfig, evolve
from qamp.liouville import AmplifierModel
from qamp.thermo import (
    CSV_COLUMNS,
    ThermoSample,
    efficiency,
    field_power,
    first_law_residual,
    heat_current,
    power_operator,
    power_operator_closed_form,
    steady_state_time,
    thermo_sample,
)


def model(order=2, n=6, **kw):
    base = dict(order=order, omega_res_over_lambda=20.0, lambda_over_gamma=10.0, field_dim=n)
    base.update(kw)
    return AmplifierModel.from_ratios(**base)


def test_csv_columns_match_sample_fields():
    assert tuple(ThermoSample.__dataclass_fields__) == CSV_COLUMNS


def test_zero_currents_at_bath_fixed_point():
    m = model()
    nh, nc = m.nbar_h, m.nbar_c
    p = np.array([(nh + 1) / nh, (nc + 1) / nc, 1.0])
    atom = np.diag(p / p.sum()).astype(complex)
    rho = build_joint_state(AtomStateSpec.general(atom), FieldStateSpec.fock(2), m.layout).rho
    assert abs(heat_current(rho, m, "hot")) < 1e-15
    assert abs(heat_current(rho, m, "cold")) < 1e-15


@pytest.mark.parametrize("order", [1, 2])
def test_power_vanishes_on_diagonal_states(order, rng):
    m = model(order)
    rho = np.diag(rng.dirichlet(np.ones(m.layout.dim))).astype(complex)
    assert field_power(rho, m) == 0.0


@pytest.mark.parametrize("order", [1, 2])
def test_power_operator_closed_form(order):
    m = model(order, n=8)
    a, b = power_operator(m), power_operator_closed_form(m)
    assert np.abs(a - b).max() <= 1e-12 * np.abs(a).max()


def test_initial_sample_of_excited_vacuum():
    m = model()
    rho = build_joint_state(AtomStateSpec.from_level(2), FieldStateSpec.vacuum(), m.layout).rho
    s = thermo_sample(rho, m, 0.0)
    assert s.e_atom == pytest.approx(m.omega2)
    assert s.e_field == 0.0 and s.e_int == 0.0
    assert s.s_atom == 0.0 and s.s_field == 0.0 and s.s_total == 0.0
    assert s.qdot_h == 0.0 and s.p_f == 0.0
    assert s.qdot_c == pytest.approx(2 * m.gamma_c * m.nbar_c * (m.omega3 - m.omega2), rel=1e-12)
    assert math.isnan(s.eta)


@given(st.integers(0, 2**31))
def test_entropy_inequalities(seed):
    rng = np.random.default_rng(seed)
    m = model(n=4)
    rho = random_density(m.layout.dim, rng, rank=int(rng.integers(1, 6)))
    s = thermo_sample(rho, m, 0.0)
    assert s.s_total <= s.s_atom + s.s_field + 1e-10
    assert abs(s.s_atom - s.s_field) <= s.s_total + 1e-10
    assert s.s_field == pytest.approx(von_neumann_entropy(partial_trace(rho, "field", m.layout)))


def test_efficiency_and_residual():
    assert efficiency(5.0, 6.0) == pytest.approx(5 / 6)
    assert math.isnan(efficiency(1.0, 1e-13))
    s = ThermoSample(0, 0, 0, 0, 0, 0, 0, 0, qdot_h=6.0, qdot_c=-1.0, p_f=5.0, eta=5 / 6)
    assert first_law_residual(s) == 0.0


def test_steady_state_time_cases():
    t = np.linspace(0, 10, 101)
    assert steady_state_time(t, [np.ones_like(t)], 1.0, 1e-3) == 0.0
    ramp = np.minimum(t, 4.0)
    assert steady_state_time(t, [ramp], 1.0, 1e-3) == pytest.approx(4.0)
    assert steady_state_time(t, [ramp, np.ones_like(t)], 1.0, 1e-3) == pytest.approx(4.0)
    assert steady_state_time(t, [t], 1.0, 1e-3) is None
    assert steady_state_time(t[:5], [ramp[:5]], 1.0, 1e-3) is None
    glitch = np.ones_like(t)
    glitch[-1] = 2.0
    assert steady_state_time(t, [glitch], 1.0, 1e-3) is None
    with pytest.raises(ValueError):
        steady_state_time(t, [t[:-1]], 1.0, 1e-3)


def test_zero_coupling_settles_to_zero_currents():
    m = model(n=6, lambda_over_gamma=1.0).with_(coupling=0.0)
    rho0 = build_joint_state(AtomStateSpec.from_level(2), FieldStateSpec.vacuum(), m.layout).rho
    s = evolve(rho0, m, IntegratorConfig.in_gamma_units(m, 20.0, 0.1))
    cols = [s.column("qdot_h"), s.column("qdot_c")]
    floor = abs(s.samples[0].qdot_c)
    assert steady_state_time(s.times_in_gamma(), cols, 0.5, 1e-3, floor=floor) is not None
    assert abs(s.samples[-1].qdot_h) < 1e-6 * abs(s.samples[0].qdot_c)
    assert all(x.p_f == 0.0 and x.e_int == 0.0 for x in s.samples)


def test_field_energy_and_entropy_grow_at_thermodynamic_times():
    m = AmplifierModel.from_ratios(lambda_over_gamma=100.0, field_dim=60)
    rho0 = build_joint_state(AtomStateSpec.from_level(2), FieldStateSpec.vacuum(), m.layout).rho
    s = evolve(rho0, m, IntegratorConfig.in_gamma_units(m, 8.0, 0.5))
    late = s.times_in_gamma() >= 5.0 - 1e-9
    assert np.all(np.diff(s.column("e_field")[late]) > 0)
    assert np.all(np.diff(s.column("s_field")[late]) > 0)
    eta = s.column("eta")[-1]
    assert eta == pytest.approx(5 / 6, rel=5e-3)
