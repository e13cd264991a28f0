"""Tests for the norm functionals: L^p, first-order, weak-L^q, heat-smoothness, embedding ratio."""

import json
import math

import numpy as np
import pytest

from diraclab.fields import (
    SpinorField,
    exterior_annulus_mask,
    full_box_mask,
    make_grid,
    sample_field,
    unit_ball_mask,
)
from diraclab.norms import (
    NormReport,
    besov_norm,
    dirac_sobolev_norm,
    lorentz_embedding_ratio,
    lp_norm,
    weak_lq,
)

BALL_VOLUME = 4.0 * math.pi / 3.0


def _const_ball(points, magnitude=1.0):
    grid = make_grid(1.0, points)
    mask = unit_ball_mask(grid)

    def rule(x1, x2, x3):
        out = np.zeros((4,) + x1.shape, dtype=np.complex128)
        out[0] = magnitude
        return out

    return sample_field(grid, mask, rule)


def _random_field(points, seed, half_width=1.0, ball=False):
    rng = np.random.default_rng(seed)
    grid = make_grid(half_width, points)
    mask = unit_ball_mask(grid) if ball else full_box_mask(grid)
    vals = rng.standard_normal((4, points, points, points)) + 1j * rng.standard_normal(
        (4, points, points, points)
    )
    vals = np.where(mask.inside[None], vals, 0.0)
    return SpinorField(grid, mask, vals)


def _gaussian_bump(points, half_width, s, u=(1.0, 0.0, 0.0, 0.0), center=(0, 0, 0)):
    grid = make_grid(half_width, points)
    mask = full_box_mask(grid)
    uvec = np.asarray(u, dtype=np.complex128)

    def rule(x1, x2, x3):
        e = np.exp(
            -((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2 + (x3 - center[2]) ** 2)
            / (4.0 * s)
        )
        return uvec[:, None, None, None] * e[None]

    return sample_field(grid, mask, rule)


def test_lp_norm_rejects_small_p():
    f = _const_ball(16)
    with pytest.raises(ValueError, match="p >= 1"):
        lp_norm(f, 0.5)


def test_lp_norm_constant_ball():
    # squared norm is the ball volume; the staircase boundary error shrinks
    # with refinement toward (4 pi / 3)
    v32 = lp_norm(_const_ball(32), 2).value ** 2
    v64 = lp_norm(_const_ball(64), 2).value ** 2
    err32 = abs(v32 - BALL_VOLUME) / BALL_VOLUME
    err64 = abs(v64 - BALL_VOLUME) / BALL_VOLUME
    assert err32 <= 0.04
    assert err64 <= 0.02
    assert err64 < err32
    assert lp_norm(_const_ball(64), 2).value == pytest.approx(math.sqrt(v64))


def test_lp_norm_scaling_and_zero():
    f = _random_field(16, seed=3)
    base = lp_norm(f, 2.5).value
    scaled = lp_norm(SpinorField(f.grid, f.mask, (2.0 - 1.0j) * f.values), 2.5).value
    assert abs(scaled - abs(2.0 - 1.0j) * base) <= 1e-12 * scaled

    zero = SpinorField(f.grid, f.mask, np.zeros_like(f.values))
    assert lp_norm(zero, 1).value == 0.0


def test_dirac_sobolev_constant_equals_lp():
    grid = make_grid(1.0, 16)
    mask = full_box_mask(grid)
    vals = np.ones((4, 16, 16, 16), dtype=np.complex128)
    f = SpinorField(grid, mask, vals)
    a = dirac_sobolev_norm(f, 2).value
    b = lp_norm(f, 2).value
    assert a == pytest.approx(b, rel=1e-12)


def test_dirac_sobolev_plane_wave():
    grid = make_grid(1.0, 16)
    mask = full_box_mask(grid)
    k = np.pi * np.array([1.0, 2.0, -1.0])
    u = np.array([0.5, -0.5j, 1.0, 0.25])

    def rule(x1, x2, x3):
        phase = np.exp(1j * (k[0] * x1 + k[1] * x2 + k[2] * x3))
        return u[:, None, None, None] * phase[None]

    f = sample_field(grid, mask, rule)
    vol = (2.0 * grid.half_width) ** 3
    expected = math.sqrt((1.0 + float(k @ k)) * vol) * float(np.linalg.norm(u))
    got = dirac_sobolev_norm(f, 2).value
    assert abs(got - expected) <= 1e-10 * expected


def test_dirac_sobolev_rejects_small_p():
    with pytest.raises(ValueError, match="p >= 1"):
        dirac_sobolev_norm(_const_ball(16), 0.5)


def test_dirac_sobolev_fd_on_masked_field():
    f = _gaussian_bump(32, 1.0, 0.02)
    spectral = dirac_sobolev_norm(f, 2).value
    fd = dirac_sobolev_norm(f.with_mask(unit_ball_mask(f.grid)), 2, "centered_fd4")
    assert fd.meta["derivative_method"] == "centered_fd4"
    assert fd.meta["integration_mask_kind"] == "unit_ball"
    # bump mass is concentrated well inside the ball, so values are close
    assert abs(fd.value - spectral) / spectral <= 0.02


def test_weak_lq_argument_errors():
    f = _const_ball(16)
    with pytest.raises(ValueError, match="q > 0"):
        weak_lq(f, 0.0)
    with pytest.raises(ValueError, match="convention"):
        weak_lq(f, 2.0, "median")


def test_weak_lq_indicator_ball():
    f = _const_ball(64)
    for q in (1.0, 2.5, 4.0):
        rep = weak_lq(f, q, "paper_literal")
        assert abs(rep.value - BALL_VOLUME) / BALL_VOLUME <= 0.02
        assert rep.meta["argmax_level"] == pytest.approx(1.0)
    rooted = weak_lq(f, 2.0, "homogeneous_root")
    assert rooted.value == pytest.approx(math.sqrt(weak_lq(f, 2.0, "paper_literal").value))


def test_weak_lq_scaling_and_zero():
    f = _random_field(16, seed=9, ball=True)
    base = weak_lq(f, 3.0).value
    scaled = weak_lq(SpinorField(f.grid, f.mask, 3.5j * f.values), 3.0).value
    assert abs(scaled - 3.5 * base) <= 1e-12 * scaled

    zero = SpinorField(f.grid, f.mask, np.zeros_like(f.values))
    assert weak_lq(zero, 3.0).value == 0.0
    assert weak_lq(zero, 3.0, "paper_literal").value == 0.0


def test_weak_lq_sup_is_exact_over_levels():
    f = _random_field(16, seed=21)
    q = 2.2
    literal = weak_lq(f, q, "paper_literal").value
    mags = f.abs_values()[f.mask.inside]
    h3 = f.grid.cell_volume()
    rng = np.random.default_rng(4)
    for u in rng.uniform(0.0, mags.max(), 50):
        if u <= 0:
            continue
        lam = np.count_nonzero(mags >= u) * h3
        assert u**q * lam <= literal * (1 + 1e-12)


def test_weak_lq_chebyshev_bound():
    for seed in (1, 2, 3):
        f = _random_field(16, seed=seed, ball=(seed == 2))
        for q in (1.5, 2.0, 3.0):
            rooted = weak_lq(f, q).value
            full = lp_norm(f, q).value
            assert rooted <= full * (1 + 1e-12)


def test_distribution_function_monotone():
    f = _random_field(16, seed=30)
    mags = f.abs_values()[f.mask.inside]
    levels = np.linspace(0, mags.max() * 1.1, 40)
    counts = np.array([np.count_nonzero(mags >= u) for u in levels])
    assert (np.diff(counts) <= 0).all()


def test_besov_argument_errors():
    f = _gaussian_bump(16, 1.0, 0.05)
    with pytest.raises(ValueError, match="alpha < 0"):
        besov_norm(f, 0.5)
    with pytest.raises(ValueError, match="t_range"):
        besov_norm(f, -1.0, t_range=(1.0, 0.1))
    with pytest.raises(ValueError, match="n_t"):
        besov_norm(f, -1.0, n_t=8)


def test_besov_zero_and_homogeneity():
    f = _gaussian_bump(32, 1.0, 0.02)
    zero = SpinorField(f.grid, f.mask, np.zeros_like(f.values))
    assert besov_norm(zero, -1.0, (1e-3, 1.0), 16).value == 0.0

    base = besov_norm(f, -1.0, (1e-3, 1.0), 16)
    scaled = besov_norm(
        SpinorField(f.grid, f.mask, (0.5 + 2.0j) * f.values), -1.0, (1e-3, 1.0), 16
    )
    assert abs(scaled.value - abs(0.5 + 2.0j) * base.value) <= 1e-12 * scaled.value


def test_besov_interior_argmax_self_convergence():
    f = _gaussian_bump(32, 1.0, 5e-3)
    coarse = besov_norm(f, -1.0, (1e-4, 1.0), 16)
    fine = besov_norm(f, -1.0, (1e-4, 1.0), 32)
    assert not any("t_min" in w or "t_max" in w for w in coarse.warnings)
    assert abs(fine.value - coarse.value) / fine.value <= 0.05


def test_besov_monotone_exponent_boundary_argmax():
    # alpha = -3/r with r = 1: t^{3/2} sup P_t f increases to its plateau, so
    # the argmax sits at t_max and the report must warn about it
    f = _gaussian_bump(32, 1.0, 5e-3)
    coarse = besov_norm(f, -3.0, (1e-4, 0.25), 16)
    fine = besov_norm(f, -3.0, (1e-4, 0.25), 32)
    assert any("t_max" in w for w in coarse.warnings)
    assert coarse.meta["argmax_t"] == pytest.approx(0.25)
    assert abs(fine.value - coarse.value) / fine.value <= 0.05


def test_besov_wraparound_warning_at_huge_t():
    f = _gaussian_bump(32, 1.0, 5e-3)
    rep = besov_norm(f, -3.0, (1e-4, 1e2), 24)
    assert any("sqrt(t)" in w for w in rep.warnings)
    assert any("wrap-around" in w for w in rep.warnings)
    assert rep.meta["tail_asymptote"] > 0


def test_besov_sup_mask_restricts_search_region():
    grid = make_grid(2.0, 32)
    mask = full_box_mask(grid)

    def rule(x1, x2, x3):
        e = np.exp(-(x1**2 + x2**2 + x3**2) / 0.02)
        out = np.zeros((4,) + x1.shape, dtype=np.complex128)
        out[0] = e
        return out

    f = sample_field(grid, mask, rule)
    annulus = exterior_annulus_mask(grid, 1.8)
    full = besov_norm(f, -1.0, (1e-3, 0.5), 16)
    restricted = besov_norm(f, -1.0, (1e-3, 0.5), 16, sup_mask=annulus)
    assert restricted.meta["sup_mask_kind"] == "exterior_annulus"
    assert restricted.value < 0.25 * full.value


def test_lorentz_ratio_arguments_and_zero_field():
    f = _const_ball(16)
    with pytest.raises(ValueError, match="0 < k < q"):
        lorentz_embedding_ratio(f, 3.0, 2.0)
    with pytest.raises(ValueError, match="0 < k < q"):
        lorentz_embedding_ratio(f, 2.0, 2.0)

    zero = SpinorField(f.grid, f.mask, np.zeros_like(f.values))
    with pytest.warns(UserWarning, match="zero"):
        assert math.isinf(lorentz_embedding_ratio(zero, 2.0, 3.0))


def test_lorentz_ratio_constant_ball_closed_form():
    f = _const_ball(64)
    got = lorentz_embedding_ratio(f, 2.0, 3.0)
    expected = BALL_VOLUME ** (1.0 / 2.0) / BALL_VOLUME ** (1.0 / 3.0)
    assert abs(got - expected) / expected <= 0.02


def test_lorentz_ratio_scale_invariant():
    f = _random_field(16, seed=12, ball=True)
    a = lorentz_embedding_ratio(f, 2.0, 3.0)
    b = lorentz_embedding_ratio(
        SpinorField(f.grid, f.mask, (0.0 - 7.25j) * f.values), 2.0, 3.0
    )
    assert abs(a - b) <= 1e-12 * a


def test_besov_bounded_by_lp_with_embedding_exponents():
    # p = 2, q = 4 gives theta = 1/2, alpha = theta/(theta-1) = -1, and the
    # support-in-ball exponent r = 3(q/p - 1) = 3; the ratio of the two sides
    # should be bounded across a random bump suite with one fitted constant
    def suite(seed, n):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            f = _gaussian_bump(
                32,
                1.0,
                float(rng.uniform(2e-3, 2e-2)),
                u=rng.standard_normal(4) + 1j * rng.standard_normal(4),
                center=rng.uniform(-0.3, 0.3, 3),
            )
            out.append(f)
        return out

    def ratio(f):
        ball = unit_ball_mask(f.grid)
        num = besov_norm(f, -1.0, (1e-3, 1.0), 16, sup_mask=ball).value
        den = lp_norm(f.with_mask(ball), 3.0).value
        return num / den

    fit = [ratio(f) for f in suite(100, 8)]
    fitted_c = max(fit)
    check = [ratio(f) for f in suite(200, 8)]
    assert max(check) <= 1.5 * fitted_c
    assert max(fit + check) <= 5.0 * float(np.median(fit + check))


def test_norm_report_serializes():
    rep = lp_norm(_const_ball(16), 2)
    payload = json.dumps(rep.to_dict(), sort_keys=True)
    back = json.loads(payload)
    assert back["kind"] == "lp"
    assert back["params"]["p"] == 2
    assert isinstance(rep, NormReport)
