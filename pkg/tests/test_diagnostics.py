import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ipmlab.diagnostics import (NormRecord, NormSeries, SnapshotVelocity, advect_flowmap,
                                calibrate_envelope, commutator_probe, envelope_blowup_time,
                                envelope_upper, gronwall_bound, growth_fit, leading_term,
                                leading_term_at, lower_bound_report, make_recorder,
                                profile_besov_norm, record_norms, velocity_integral)
from ipmlab.experiments import bandlimited_field, flow_bound_holds
from ipmlab.fields import Grid2D, RealField2D, grad_perp
from ipmlab.littlewood_paley import build_partition
from ipmlab.solver import FlowMapCloud, SimState, SolverConfig, StratProfile, run


def rec(t, theta=1.0, **kw):
    base = dict(t=t, grad_inf=theta, w1inf=theta + 1, linf_theta=theta, besov_low=1.0,
                besov_high=2.0, u_inf=1.0, flow_disp=0.0)
    base.update(kw)
    return NormRecord(**base)


def test_series_invariants(tmp_path):
    s = NormSeries([rec(0.0), rec(0.1)])
    with pytest.raises(ValueError, match="increasing"):
        s.append(rec(0.1))
    with pytest.raises(ValueError, match="non-finite"):
        s.append(rec(0.2, theta=float("nan")))
    path = tmp_path / "s.csv"
    s.write_csv(path)
    text = path.read_bytes()
    assert text.startswith(b"t,w1inf,linf_theta,besov_low,besov_high,u_inf,flow_disp\n")
    assert b"\r" not in text
    back = NormSeries.read_csv(path)
    assert np.array_equal(back.t, s.t) and np.array_equal(back.column("w1inf"), s.column("w1inf"))
    with pytest.raises(ValueError):
        s.at(0.5)


def test_record_norms_zero_state(g32):
    r = record_norms(SimState.from_field(g32.zeros()), build_partition(g32))
    assert all(v == 0.0 for v in (r.grad_inf, r.w1inf, r.linf_theta, r.besov_low, r.besov_high, r.u_inf))


def test_theta_bounded_by_w1inf(g64, rng):
    eta = bandlimited_field(g64, 8, rng)
    r = make_recorder(g64)(SimState.from_field(eta))
    assert r.linf_theta <= r.w1inf
    th1, th2 = grad_perp(eta)
    assert r.linf_theta == pytest.approx(np.hypot(th1.samples, th2.samples).max())


def test_leading_term_basic(g64, rng):
    eta = bandlimited_field(g64, 8, rng)
    assert leading_term(eta, StratProfile.constant(g64, 0.0)) == 0.0
    one = leading_term(eta, StratProfile.constant(g64, 1.0))
    assert leading_term(3.0 * eta, StratProfile.constant(g64, 1.0)) == pytest.approx(3 * one, rel=1e-13)
    # doubling g' doubles the leading term exactly
    assert leading_term(eta, StratProfile.constant(g64, 2.0)) == 2 * one
    shifted = RealField2D(g64, np.roll(eta.samples, 7, axis=0))
    assert abs(leading_term(shifted, StratProfile.constant(g64, 1.0)) - one) < 1e-10


def test_leading_term_of_a_mode(g64):
    # eta = cos(k x1): R1^2 grad_perp eta = -grad_perp eta, sup = k
    k = g64.k_min
    eta = g64.sample(lambda a, b: np.cos(k * a))
    assert leading_term(eta, StratProfile.constant(g64, -1.5)) == pytest.approx(1.5 * k, rel=1e-13)
    assert leading_term_at(eta, StratProfile.constant(g64, 1.0), (2.0, 0.3)) == pytest.approx(k, rel=1e-12)


def test_flowmap_zero_velocity_is_identity(g32):
    z = np.zeros((32, 32), complex)
    hist = SnapshotVelocity([0.0, 1.0], [z, z], [z, z])
    cloud = advect_flowmap(FlowMapCloud.on_grid(g32, 4), hist, [0.25] * 4)
    assert np.all(cloud.displacement == 0.0)


def test_flowmap_constant_velocity(g32):
    u1 = np.zeros((32, 32), complex)
    u1[0, 0] = 1.0
    z = np.zeros((32, 32), complex)
    hist = SnapshotVelocity([0.0, 3.0], [u1, u1], [z, z])
    c0 = FlowMapCloud.from_points(g32, [[3.5, 0.0], [-1.0, 2.0]])
    c = advect_flowmap(c0, hist, [0.1] * 10)
    assert np.allclose(c.displacement, [[1.0, 0.0], [1.0, 0.0]], atol=1e-12)
    assert np.allclose(c.positions[0], [-3.5, 0.0])
    with pytest.raises(ValueError, match="cover"):
        advect_flowmap(c0, hist, [1.0] * 4)


def test_flowmap_matches_solver_particles(g64):
    # steady shear u = (0, -cos(k x1)): both paths agree
    eta = g64.sample(lambda a, b: np.cos(g64.k_min * a))
    cloud = FlowMapCloud.on_grid(g64, 8)
    s = run(eta, StratProfile.constant(g64, 0.0), SolverConfig(T=0.3, fixed_dt=0.01), cloud=cloud)
    st0 = SimState.from_field(eta)
    u1, u2 = st0.u
    hist = SnapshotVelocity.from_fields([0.0, 1.0], [(u1, u2), (u1, u2)])
    c = advect_flowmap(cloud, hist, [0.01] * 30)
    assert np.abs(c.displacement - s.final_state.cloud.displacement).max() < 1e-12
    assert flow_bound_holds(s)
    assert s[-1].flow_disp <= (1 + 1e-6) * velocity_integral(s)


def test_commutator_vanishes_for_identity_and_lattice_translations(g64, rng):
    eta = bandlimited_field(g64, 10, rng)
    theta = grad_perp(eta)
    cloud = FlowMapCloud.on_grid(g64)
    assert commutator_probe(theta, cloud) < 1e-11
    shift = np.zeros_like(cloud.initial)
    shift[..., 0] = 5 * g64.h
    shift[..., 1] = -3 * g64.h
    assert commutator_probe(theta, cloud.moved(shift)) < 1e-11
    assert commutator_probe(theta[0], cloud.moved(shift)) < 1e-11


def test_commutator_positive_for_a_shear(g64, rng):
    theta = grad_perp(bandlimited_field(g64, 10, rng))
    cloud = FlowMapCloud.on_grid(g64)
    x1 = cloud.initial[..., 0]
    vals = []
    for a in (0.05, 0.1, 0.2):
        d = np.zeros_like(cloud.initial)
        d[..., 1] = a * np.sin(g64.k_min * x1)
        vals.append(commutator_probe(theta, cloud.moved(d)))
    assert vals[0] > 1e-3 and vals[0] < vals[1] < vals[2]


def test_commutator_rejects_folded_or_sparse_clouds(g32, rng):
    theta = grad_perp(bandlimited_field(g32, 4, rng))
    cloud = FlowMapCloud.on_grid(g32)
    d = np.zeros_like(cloud.initial)
    d[..., 0] = 2 / g32.k_min * np.sin(g32.k_min * cloud.initial[..., 0])
    with pytest.raises(ValueError, match="folded"):
        commutator_probe(theta, cloud.moved(d))
    with pytest.raises(ValueError, match="full grid"):
        commutator_probe(theta, FlowMapCloud.on_grid(g32, 2))


def test_gronwall_forms():
    assert gronwall_bound(2.0, 0.5, 1.0) == pytest.approx(2 * math.exp(0.5))
    # alpha = 2: C0 / (1 - C0 A)
    assert gronwall_bound(2.0, 0.25, 2.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        gronwall_bound(2.0, 0.5, 2.0)


def test_envelope():
    low0, high0, C, cg = 0.3, 1.2, 0.8, 0.5
    A = cg / 2 + 2 * high0
    assert envelope_upper(0.0, (low0, high0), (C, cg)) == pytest.approx((low0, A))
    ts = envelope_blowup_time(high0, C, cg)
    assert ts == 1.0 / (C * A)
    vals = [envelope_upper(t, (low0, high0), (C, cg)) for t in np.linspace(0, 0.99 * ts, 50)]
    assert all(b[0] > a[0] and b[1] > a[1] for a, b in zip(vals, vals[1:]))
    t = 0.5 * ts
    assert vals and envelope_upper(t, (low0, high0), (C, cg))[1] == pytest.approx(A / (1 - C * A * t))
    with pytest.raises(ValueError, match="t\\*"):
        envelope_upper(ts, (low0, high0), (C, cg))


def test_lower_bound_report():
    s = NormSeries([rec(0.0, theta=2.0), rec(0.1, theta=2.5), rec(0.2, theta=3.0)])
    r0 = lower_bound_report(s, 10.0, 0.0)
    assert r0.verdict and r0.threshold == -2.0
    r = lower_bound_report(s, 10.0, 0.2)
    assert r.linear_term == pytest.approx(2.0) and r.threshold == pytest.approx(-1.0) and r.verdict
    assert not lower_bound_report(s, 100.0, 0.2).verdict
    assert all(v >= 0 for k, v in r.as_dict().items() if k in ("theta_inf", "leading", "linear_term", "theta0_inf"))
    with pytest.raises(ValueError):
        lower_bound_report(s, 1.0, 0.3)


def test_unforced_run_is_pure_transport(g64, rng):
    eta = bandlimited_field(g64, 4, rng, amp=0.01)
    prof = StratProfile.constant(g64, 0.0)
    s = run(eta, prof, SolverConfig(T=0.1))
    lead = leading_term(eta, prof)
    r = lower_bound_report(s, lead, s[-1].t)
    assert lead == 0 and r.verdict
    assert r.theta_inf == pytest.approx(r.theta0_inf, rel=1e-2)


@given(a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_growth_fit_exact_on_lines(a, b):
    s = NormSeries([rec(t, theta=a + b * t) for t in np.linspace(0, 1, 11)])
    assert growth_fit(s, (0, 1)) == pytest.approx(b, abs=1e-10)


def test_growth_fit_constant_and_errors():
    s = NormSeries([rec(t, theta=4.0) for t in np.linspace(0, 1, 5)])
    assert abs(growth_fit(s, (0.0, 1.0))) < 1e-12
    with pytest.raises(ValueError, match="3 samples"):
        growth_fit(s, (0.0, 0.3))


def test_envelope_calibration_freezes_and_dominates(g64, rng):
    prof = StratProfile.constant(g64, 1.0)
    cg = profile_besov_norm(prof)
    # constant 1: only the j = -1 block, ||1||_2 = 8 on the box, weight 2^(-2)
    assert cg == pytest.approx(2.0, rel=1e-12)
    calib = run(bandlimited_field(g64, 6, rng, 2.0), prof, SolverConfig(T=0.3))
    C = calibrate_envelope(calib, cg)
    for r in calib.records:
        low, high = envelope_upper(r.t, (calib[0].besov_low, calib[0].besov_high), (C, cg))
        assert high >= r.besov_high and low >= r.besov_low
    if C > 0:
        with pytest.raises(AssertionError):
            for r in calib.records:
                low, high = envelope_upper(r.t, (calib[0].besov_low, calib[0].besov_high), (0.9 * C, cg))
                assert high >= r.besov_high and low >= r.besov_low
