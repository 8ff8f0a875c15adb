import math

import numpy as np
import pytest
import sympy as sp

from ipmlab.fields import Grid2D, laplacian
from ipmlab.seed import (AnalyticJet, ResolutionError, SeedSpec, analytic_dx13_dx2_G, build_eta0,
                         build_f_N, dx13_dx2_at_origin_symbolic, eval_cutoff_radial, eval_G_N,
                         eval_harmonic_P, lap_G_closed_form, log_core_split, sample_seed_product)


def test_quartic_is_harmonic():
    x1, x2 = sp.symbols("x1 x2")
    P = eval_harmonic_P(x1, x2)
    assert sp.simplify(sp.diff(P, x1, 2) + sp.diff(P, x2, 2)) == 0


def test_cutoff_values():
    assert eval_cutoff_radial(0.0) == 1.0 and eval_cutoff_radial(1.0) == 1.0
    assert eval_cutoff_radial(2.0) == 0.0 and eval_cutoff_radial(3.0) == 0.0
    assert eval_cutoff_radial(1.5) == pytest.approx(0.5)
    r = np.linspace(0, 3, 301)
    assert np.all(np.diff(eval_cutoff_radial(r)) <= 0)


@pytest.mark.parametrize("N", [1, 4, 8, 12, 30])
def test_origin_jet_is_minus_6N_log2(N):
    v = dx13_dx2_at_origin_symbolic(N)
    assert sp.simplify(v + 6 * N * sp.log(2)) == 0


def test_log_core_split():
    log_part, rest = log_core_split()
    x1, x2, d = sp.symbols("x1 x2 delta", real=True)
    assert not rest.has(sp.log)
    assert sp.simplify(rest.subs({x1: 0, x2: 0})) == 0
    assert log_part.has(sp.log)


def fd4(f, x1, x2, h):
    """4th-order central stencils for d1^3 d2."""
    c1 = np.array([1, -8, 0, 8, -1]) / 12.0
    c3 = np.array([1, -8, 13, 0, -13, 8, -1]) / 8.0
    tot = 0.0
    for i, a in enumerate(c3):
        for j, b in enumerate(c1):
            if a and b:
                tot += a * b * f(x1 + (i - 3) * h, x2 + (j - 2) * h)
    return tot / (h**3 * h)


@pytest.mark.parametrize("pt", [(0.3, 0.2), (-0.45, 0.6), (0.7, -0.1)])
def test_jet_matches_finite_differences_off_center(pt):
    spec = SeedSpec(8, Grid2D(4.0, 64))
    total, log_part, rest = analytic_dx13_dx2_G(spec, *pt)
    g = lambda a, b: eval_G_N(spec, a, b)
    fd = fd4(g, pt[0], pt[1], 2e-3)
    assert fd == pytest.approx(total, rel=1e-6)
    assert total == pytest.approx(AnalyticJet(8).dx13_dx2(*pt), rel=1e-12)


def test_numeric_jet_at_origin():
    total, log_part, rest = analytic_dx13_dx2_G(SeedSpec(8, Grid2D(4.0, 64)), 0.0, 0.0)
    assert total == pytest.approx(-48 * math.log(2), rel=1e-14)
    assert rest == 0.0


def test_laplacian_closed_form():
    jet = AnalyticJet(6)
    x = np.linspace(-1, 1, 7)
    X1, X2 = np.meshgrid(x, x + 0.05)
    assert np.allclose(jet.d_lap(0, 0, X1, X2), lap_G_closed_form(6, X1, X2), rtol=1e-12, atol=1e-12)


def test_margin_guard():
    with pytest.raises(ValueError, match="margin"):
        SeedSpec(4, Grid2D(2.0, 64))
    with pytest.raises(ValueError):
        SeedSpec(4, Grid2D(4.0, 64), x0=(1.5, 0.0))
    with pytest.raises(ValueError):
        SeedSpec(0)


def test_resolution_guard_names_min_n():
    spec = SeedSpec(8, Grid2D(4.0, 256))
    assert not spec.resolved and spec.min_resolving_n() == 512
    with pytest.raises(ResolutionError, match="n >= 512"):
        build_f_N(spec)
    loose = SeedSpec(8, Grid2D(4.0, 256), strict=False)
    with pytest.warns(UserWarning):
        build_f_N(loose)
    assert SeedSpec(8, Grid2D(4.0, 512)).resolved


def core_error(n):
    g = Grid2D(4.0, n)
    f = build_f_N(SeedSpec(4, g))
    x1, x2 = g.mesh
    inside = np.hypot(x1, x2) < 0.8
    exact = AnalyticJet(4).d_lap(1, 0, x1[inside], x2[inside])
    return np.abs(f.samples[inside] - exact).max() / np.abs(exact).max()


def test_f_N_matches_jet_inside_the_core():
    # chi = 1 on r <= 1, so f_N = d1 Lap G_N there; convergence is faster than algebraic
    e512, e1024 = core_error(512), core_error(1024)
    assert e1024 < 1e-6
    assert e512 / e1024 > 100


def test_seed_is_shifted_with_x0():
    g = Grid2D(8.0, 128)
    a = sample_seed_product(SeedSpec(4, g)).samples
    b = sample_seed_product(SeedSpec(4, g, x0=(1.0, 0.0))).samples
    assert np.abs(np.roll(a, 8, axis=0) - b).max() < 1e-12


def test_eta0_scaling():
    spec = SeedSpec(4, Grid2D(4.0, 128))
    assert np.allclose(build_eta0(spec).samples, build_f_N(spec).samples / 2.0)
    assert abs(build_f_N(spec).mean()) < 1e-12
