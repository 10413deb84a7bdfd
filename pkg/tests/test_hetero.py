import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilayerctrl.bilayer import PhysicalParams, SetPoint, eigenbasis, linearize
from bilayerctrl.errors import SolverError, ValidationError
from bilayerctrl.fields import CoefficientField, MatrixField, const
from bilayerctrl.hetero import (
    HeteroSystem, constant_system, from_bilayer, layer_order_permutations, validate,
)

SEC4 = SetPoint(H1=3.0, U1=1.0, H2=1.0, U2=0.95)
SEC4_PARAMS = PhysicalParams(g=9.81, r=0.01, Cf=0.05)
Q0_LAYER = np.array([[-1.5, 0.01], [0.01, 1.5]])
R1_LAYER = np.array([[0.5, 0.1], [0.15, -0.5]])


@pytest.fixture(scope="module")
def sec4_system():
    model = linearize(SEC4, SEC4_PARAMS)
    basis = eigenbasis(model)
    return model, basis, from_bilayer(model, basis, Q0_LAYER, R1_LAYER)


def test_validate_passes_sec4(sec4_system):
    _, _, system = sec4_system
    assert validate(system).ok


def test_sec4_speeds_and_zero_left_coupling(sec4_system):
    _, basis, system = sec4_system
    lam_u = system.speeds_right(np.array(0.0))
    lam_v = system.speeds_left(np.array(0.0))
    closed = np.array([4.0820919, 6.4249424])          # decoupled-layer values
    closed_l = np.array([2.1820919, 4.4249424])
    assert np.max(np.abs(np.sort(lam_u) - closed)) <= 0.05
    assert np.max(np.abs(np.sort(lam_v) - closed_l)) <= 0.05
    assert np.all(np.diff(lam_u) > 0) and np.all(np.diff(lam_v) > 0)
    x = np.linspace(0, 1, 11)
    assert np.all(system.So(x) == 0.0)


def test_sec4_boundary_matrices_permuted(sec4_system):
    _, _, system = sec4_system
    # internal ordering lists the lower-layer mode first in both families
    assert np.allclose(system.Q0, [[1.5, 0.01], [0.01, -1.5]])
    assert np.allclose(system.R1, [[-0.5, 0.15], [0.1, 0.5]])


def test_layer_permutations_are_permutations(sec4_system):
    _, basis, _ = sec4_system
    Pu, Pv = layer_order_permutations(basis)
    for P in (Pu, Pv):
        assert np.allclose(P @ P.T, np.eye(2))
        assert np.all(np.sum(P, axis=0) == 1.0)


def test_constant_coefficients_sampled_equal(sec4_system):
    _, _, system = sec4_system
    assert np.allclose(system.Sr(np.array(0.0)), system.Sr(np.array(1.0)))
    assert np.allclose(system.Sl(np.array(0.0)), system.Sl(np.array(1.0)))


def test_frictionless_bilayer_pure_transport():
    model = linearize(SEC4, PhysicalParams(g=9.81, r=0.01, Cf=0.0))
    basis = eigenbasis(model)
    system = from_bilayer(model, basis, Q0_LAYER, R1_LAYER)
    x = np.linspace(0, 1, 7)
    assert np.all(system.Sr(x) == 0.0)
    assert np.all(system.Sl(x) == 0.0)


def test_validate_equal_speeds_fail():
    system = constant_system(lam_r=(1.0, 1.0), lam_l=(0.5,))
    report = validate(system)
    assert not report.ok
    assert "increasing" in report.failure


def test_validate_negative_speed_fail():
    report = validate(constant_system(lam_r=(-1.0,), lam_l=(0.5,)))
    assert not report.ok and "positive" in report.failure


def test_validate_dimension_mismatch():
    good = constant_system(lam_r=(1.0, 2.0), lam_l=(0.5, 0.8))
    bad = HeteroSystem(n=2, m=2, Lambda_r=good.Lambda_r, Lambda_l=good.Lambda_l,
                       Sr=good.Sr, Sl=good.Sl, So=good.So,
                       Q0=np.zeros((3, 2)), R1=good.R1)
    report = validate(bad)
    assert not report.ok and "Q0" in report.failure


def test_validate_varying_speed_ordering():
    lam1 = CoefficientField(func=lambda x: 1.0 + 0.5 * x)
    lam2 = CoefficientField(func=lambda x: 2.0 - 1.2 * x)   # crosses lam1
    system = HeteroSystem(n=2, m=1, Lambda_r=(lam1, lam2), Lambda_l=(const(0.5),),
                          Sr=MatrixField.zeros(2, 2), Sl=MatrixField.zeros(2, 1),
                          So=MatrixField.zeros(1, 2), Q0=np.zeros((2, 1)),
                          R1=np.zeros((1, 2)))
    assert not validate(system).ok


def test_from_bilayer_rejects_bad_shapes(sec4_system):
    model, basis, _ = sec4_system
    with pytest.raises(ValidationError):
        from_bilayer(model, basis, np.zeros((3, 2)), R1_LAYER)


def test_speed_bounds(sec4_system):
    _, _, system = sec4_system
    lo, hi = system.speed_bounds()
    assert 0 < lo <= hi
    assert lo == pytest.approx(2.1583118, abs=1e-4)
    assert hi == pytest.approx(6.4380292, abs=1e-4)


@settings(max_examples=30, deadline=None, derandomize=True)
@given(st.tuples(st.floats(0.5, 5.0), st.floats(-0.8, 0.8),
                 st.floats(0.5, 5.0), st.floats(-0.8, 0.8)))
def test_from_bilayer_validates_for_subcritical_setpoints(t):
    sp = SetPoint(H1=t[0], U1=t[1] * np.sqrt(9.81 * t[0]),
                  H2=t[2], U2=t[3] * np.sqrt(9.81 * t[2]))
    try:
        model = linearize(sp, SEC4_PARAMS)
        basis = eigenbasis(model)
        system = from_bilayer(model, basis, Q0_LAYER, R1_LAYER)
    except (SolverError, ValidationError):
        return  # degenerate or non 2+2 split, excluded by the property
    assert validate(system).ok
