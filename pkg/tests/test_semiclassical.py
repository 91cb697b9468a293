import dataclasses

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from qamp.errors import DegenerateSteadyStateError
from qamp.liouville import AmplifierModel
from qamp.semiclassical import (
    SemiclassicalModel,
    dissipator_superop,
    max_relative_discrepancy,
    rotating_generator,
    sc_analytic_currents,
    sc_efficiency,
    sc_numeric_steady_state,
    semiclassical_report,
)

REFERENCE = SemiclassicalModel.from_amplifier(AmplifierModel.from_ratios())


def test_reference_currents():
    c = sc_analytic_currents(REFERENCE)
    assert c.qdot_h_sc == pytest.approx(0.6927, abs=5e-5)
    assert c.qdot_c_sc == pytest.approx(-0.1155, abs=5e-5)
    assert c.p_sc == pytest.approx(0.5773, abs=5e-5)
    assert c.eta_sc == pytest.approx(5 / 6, rel=1e-15)
    assert sc_efficiency(REFERENCE) == pytest.approx(5 / 6, rel=1e-15)


def test_equal_occupations_give_zero_currents():
    m = dataclasses.replace(REFERENCE, nbar_c=REFERENCE.nbar_h)
    c = sc_analytic_currents(m)
    assert c.qdot_h_sc == 0.0 and c.qdot_c_sc == 0.0 and c.p_sc == 0.0
    rho, num, _ = sc_numeric_steady_state(dataclasses.replace(m, gamma_c=m.gamma_h))
    assert abs(num.qdot_h_sc) < 1e-12 and abs(num.qdot_c_sc) < 1e-12


def test_strong_drive_limit():
    m = dataclasses.replace(REFERENCE, coupling=1e7)
    c = sc_analytic_currents(m)
    gh, gc, nh, nc = m.gamma_h, m.gamma_c, m.nbar_h, m.nbar_c
    pump = gh * nh + gc * nc
    limit = 2 * gh * gc * (nh - nc) * pump / c.beta_sc
    assert c.qdot_h_sc == pytest.approx(limit * (m.omega3 - m.omega1), rel=1e-9)
    assert c.p_sc == pytest.approx(limit * (m.omega2 - m.omega1), rel=1e-9)


def test_zero_drive_detailed_balance():
    m = dataclasses.replace(REFERENCE, coupling=0.0, gamma_c=3e-3)
    rho, num, explicit = sc_numeric_steady_state(m)
    p1, p2, p3 = np.real(np.diag(rho))
    assert p3 / p1 == pytest.approx(m.nbar_h / (m.nbar_h + 1), rel=1e-10)
    assert p3 / p2 == pytest.approx(m.nbar_c / (m.nbar_c + 1), rel=1e-10)
    assert np.abs(rho - np.diag(np.diag(rho))).max() < 1e-14
    assert abs(num.qdot_h_sc) < 1e-14 and explicit == 0.0


def test_efficiency_limits():
    assert sc_efficiency(dataclasses.replace(REFERENCE, omega2=REFERENCE.omega3 - 1e-9)) == pytest.approx(1.0)
    assert sc_efficiency(dataclasses.replace(REFERENCE, omega2=REFERENCE.omega1 + 1e-9)) == pytest.approx(0.0, abs=1e-9)


def test_reference_numeric_agrees():
    rep = semiclassical_report(REFERENCE)
    assert rep["max_rel_discrepancy"] < 1e-8
    assert rep["numeric"]["p_explicit"] == pytest.approx(rep["p_sc"], rel=1e-8)
    assert rep["eta_formula"] == pytest.approx(rep["eta_sc"], rel=1e-14)
    assert sum(rep["numeric"]["populations"]) == pytest.approx(1.0, abs=1e-14)


log_rate = st.floats(-3, 0)
log_n = st.floats(-2, 1)


@given(log_rate, log_rate, log_n, log_n, log_rate)
def test_closed_form_identity_and_sign(gh, gc, nh, nc, lam):
    assume(abs(nh - nc) > 1e-3)
    m = dataclasses.replace(REFERENCE, gamma_h=10**gh, gamma_c=10**gc, nbar_h=10**nh, nbar_c=10**nc, coupling=10**lam)
    c = sc_analytic_currents(m)
    scale = max(abs(c.qdot_h_sc), 1e-300)
    assert abs(c.qdot_h_sc + c.qdot_c_sc - c.p_sc) <= 1e-14 * scale
    assert np.sign(c.qdot_h_sc) == np.sign(m.nbar_h - m.nbar_c)
    assert c.qdot_c_sc / c.qdot_h_sc == pytest.approx(-(m.omega3 - m.omega2) / (m.omega3 - m.omega1), rel=1e-12)


@given(log_rate, log_rate, log_n, log_n, log_rate)
def test_closed_form_matches_null_space(gh, gc, nh, nc, lam):
    assume(abs(nh - nc) > 0.05)
    m = dataclasses.replace(REFERENCE, gamma_h=10**gh, gamma_c=10**gc, nbar_h=10**nh, nbar_c=10**nc, coupling=10**lam)
    _, num, _ = sc_numeric_steady_state(m)
    assert max_relative_discrepancy(sc_analytic_currents(m), num) < 1e-8


def test_degenerate_null_space():
    m = dataclasses.replace(REFERENCE, nbar_h=0.0, nbar_c=0.0)
    with pytest.raises(DegenerateSteadyStateError):
        sc_numeric_steady_state(m)


def test_generator_is_trace_preserving():
    gen, hot, cold = rotating_generator(REFERENCE)
    trace_row = np.eye(3).reshape(-1, order="F")
    for g in (gen, hot, cold):
        assert np.abs(trace_row @ g).max() < 1e-15
    d = dissipator_superop(1, 0.5, 2.0)
    rho = np.diag([0.2, 0.5, 0.3]).astype(complex)
    out = (d @ rho.reshape(-1, order="F")).reshape(3, 3, order="F")
    assert out[2, 2].real == pytest.approx(2 * 0.5 * 2.0 * 0.2 - 2 * 0.5 * 3.0 * 0.3)


def test_model_validation():
    with pytest.raises(ValueError):
        dataclasses.replace(REFERENCE, gamma_h=0.0)
    with pytest.raises(ValueError):
        dataclasses.replace(REFERENCE, omega2=REFERENCE.omega3 + 1)
    assert set(REFERENCE.as_dict()) == {f.name for f in dataclasses.fields(SemiclassicalModel)}
