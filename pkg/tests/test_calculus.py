"""Tests for spectral/finite-difference alpha.p application and the heat semigroup."""

import numpy as np
import pytest

from diraclab.calculus import (
    HeatPropagator,
    apply_dirac,
    apply_dirac_squared,
    heat_semigroup,
    laplacian_spectral,
    sup_norm,
)
from diraclab.fields import (
    SpinorField,
    full_box_mask,
    make_grid,
    quadrature,
    sample_field,
    unit_ball_mask,
)
from diraclab.matrices import alpha


def _box_field(half_width, points, rule):
    grid = make_grid(half_width, points)
    mask = full_box_mask(grid)
    return sample_field(grid, mask, rule)


def _gaussian_rule(s, u, center=(0.0, 0.0, 0.0)):
    u = np.asarray(u, dtype=np.complex128)

    def rule(x1, x2, x3):
        e = np.exp(
            -((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2 + (x3 - center[2]) ** 2)
            / (4.0 * s)
        )
        return u[:, None, None, None] * e[None]

    return rule


def test_plane_wave_spectral_exact():
    grid = make_grid(1.0, 16)
    mask = full_box_mask(grid)
    k = np.pi * np.array([1.0, -2.0, 3.0])
    u = np.array([0.3 + 0.1j, -0.2, 0.5j, 1.0])

    def rule(x1, x2, x3):
        phase = np.exp(1j * (k[0] * x1 + k[1] * x2 + k[2] * x3))
        return u[:, None, None, None] * phase[None]

    f = sample_field(grid, mask, rule)
    out = apply_dirac(f)
    ak = sum(k[j] * alpha(j + 1) for j in range(3))
    expected_u = ak @ u

    phase = np.exp(
        1j
        * (
            k[0] * grid.coords()[0]
            + k[1] * grid.coords()[1]
            + k[2] * grid.coords()[2]
        )
    )
    expected = expected_u[:, None, None, None] * phase[None]
    scale = np.abs(expected).max()
    assert np.abs(out.values - expected).max() <= 1e-12 * scale


def test_constant_field_all_methods_zero():
    def rule(x1, x2, x3):
        return np.broadcast_to(
            np.array([1.0, 2.0, -1.0j, 0.5])[:, None, None, None], (4,) + x1.shape
        ).astype(np.complex128)

    f = _box_field(1.0, 16, rule)
    for method in ("spectral_periodic", "centered_fd2", "centered_fd4"):
        out = apply_dirac(f, method)
        assert np.abs(out.values).max() <= 1e-13


def test_nyquist_mode_derivative_zeroed():
    grid = make_grid(1.0, 16)
    mask = full_box_mask(grid)

    def rule(x1, x2, x3):
        # the alternating-sign grid mode along axis 1; at half-integer cell
        # centers the Nyquist pattern (-1)^i is a sampled sine, not cosine
        sign = np.sin(np.pi * grid.points_per_axis * x1 / (2.0 * grid.half_width))
        out = np.zeros((4,) + x1.shape, dtype=np.complex128)
        out[0] = sign
        return out

    f = sample_field(grid, mask, rule)
    out = apply_dirac(f)
    assert np.abs(out.values).max() <= 1e-12


def test_spectral_requires_full_box():
    grid = make_grid(2.0, 16)
    f = sample_field(grid, unit_ball_mask(grid), lambda x1, x2, x3: np.ones((4,) + x1.shape, dtype=np.complex128))
    with pytest.raises(ValueError, match="full_box"):
        apply_dirac(f, "spectral_periodic")
    with pytest.raises(ValueError, match="method"):
        apply_dirac(f, "upwind")


def _fd_error(points, method):
    def rule(x1, x2, x3):
        prof = x1 * np.exp(-(x1**2 + x2**2 + x3**2))
        out = np.zeros((4,) + x1.shape, dtype=np.complex128)
        out[0] = prof
        return out

    f = _box_field(4.0, points, rule)
    ref = apply_dirac(f, "spectral_periodic")
    fd = apply_dirac(f, method)
    sel = fd.mask.inside
    return np.abs((fd.values - ref.values)[:, sel]).max()


def test_fd2_second_order_against_spectral():
    ratio = _fd_error(32, "centered_fd2") / _fd_error(64, "centered_fd2")
    assert 3.0 <= ratio <= 5.5


def test_fd4_fourth_order_against_spectral():
    ratio = _fd_error(32, "centered_fd4") / _fd_error(64, "centered_fd4")
    assert ratio >= 10.0


def test_fd_mask_erosion():
    grid = make_grid(1.0, 24)
    mask = unit_ball_mask(grid)
    f = sample_field(grid, mask, _gaussian_rule(0.1, [1.0, 0, 0, 0]))
    out2 = apply_dirac(f, "centered_fd2")
    out4 = apply_dirac(f, "centered_fd4")
    n2 = int(out2.mask.inside.sum())
    n4 = int(out4.mask.inside.sum())
    assert n4 < n2 < int(mask.inside.sum())
    # eroded cells have their full stencil inside the source mask
    inside = mask.inside
    idx = np.argwhere(out2.mask.inside)
    i, j, k = idx[0]
    assert inside[i - 1 : i + 2, j, k].all()
    assert inside[i, j - 1 : j + 2, k].all()
    assert inside[i, j, k - 1 : k + 2].all()
    # values vanish off the eroded mask
    assert np.abs(out2.values[:, ~out2.mask.inside]).max() == 0.0


def test_dirac_squared_plane_wave():
    grid = make_grid(1.0, 16)
    mask = full_box_mask(grid)
    k = np.pi * np.array([2.0, 1.0, -1.0])

    def rule(x1, x2, x3):
        phase = np.exp(1j * (k[0] * x1 + k[1] * x2 + k[2] * x3))
        u = np.array([1.0, 0.5j, -0.25, 0.0])
        return u[:, None, None, None] * phase[None]

    f = sample_field(grid, mask, rule)
    out = apply_dirac_squared(f)
    expected = float(k @ k) * f.values
    assert np.abs(out.values - expected).max() <= 1e-12 * np.abs(expected).max()


def test_dirac_squared_is_componentwise_laplacian():
    rng = np.random.default_rng(5)
    grid = make_grid(1.0, 16)
    mask = full_box_mask(grid)
    # random band-limited smooth field
    vals = np.zeros((4, 16, 16, 16), dtype=np.complex128)
    spec = np.zeros_like(vals)
    spec[:, :4, :4, :4] = rng.standard_normal((4, 4, 4, 4)) + 1j * rng.standard_normal(
        (4, 4, 4, 4)
    )
    vals = np.fft.ifftn(spec, axes=(1, 2, 3))
    f = SpinorField(grid, mask, vals)
    a = apply_dirac_squared(f)
    b = laplacian_spectral(f)
    scale = np.abs(b.values).max()
    assert np.abs(a.values - b.values).max() <= 1e-10 * scale


def test_dirac_squared_matches_second_difference_stencil():
    def second_diff_neg_laplacian(f):
        h = f.grid.spacing
        out = np.zeros_like(f.values)
        for ax in (1, 2, 3):
            out += (
                2.0 * f.values
                - np.roll(f.values, 1, axis=ax)
                - np.roll(f.values, -1, axis=ax)
            ) / h**2
        return out

    errs = []
    for n in (32, 64):
        f = _box_field(4.0, n, lambda x1, x2, x3: _gaussian_rule(0.25, [1.0, 0, 1j, 0])(x1, x2, x3))
        spec = apply_dirac_squared(f)
        direct = second_diff_neg_laplacian(f)
        errs.append(np.abs(spec.values - direct).max())
    ratio = errs[0] / errs[1]
    assert 3.0 <= ratio <= 5.5


def test_heat_rejects_nonpositive_time():
    f = _box_field(1.0, 16, _gaussian_rule(0.05, [1.0, 0, 0, 0]))
    with pytest.raises(ValueError, match="positive"):
        heat_semigroup(f, 0.0)
    with pytest.raises(ValueError, match="positive"):
        heat_semigroup(f, -1.0)


def test_heat_tiny_time_is_near_identity():
    f = _box_field(1.0, 32, _gaussian_rule(0.02, [1.0, -1.0j, 0, 0]))
    out = heat_semigroup(f, 1e-6)
    num = np.sqrt(quadrature(SpinorField(f.grid, f.mask, out.values - f.values), 2))
    den = np.sqrt(quadrature(f, 2))
    assert num / den <= 1e-3


def test_heat_gaussian_closed_form():
    s, t = 0.008, 0.03
    u = np.array([0.5, 0.25j, -1.0, 0.1])
    f = _box_field(1.0, 64, _gaussian_rule(s, u))
    out = heat_semigroup(f, t)
    x1, x2, x3 = f.grid.coords()
    factor = (s / (s + t)) ** 1.5
    e = np.exp(-(x1**2 + x2**2 + x3**2) / (4.0 * (s + t)))
    expected = factor * u[:, None, None, None] * e[None]
    scale = np.abs(expected).max()
    assert np.abs(out.values - expected).max() <= 1e-6 * scale


def test_heat_mass_conservation_per_component():
    s = 0.008
    u = np.array([1.0, 0.3 - 0.2j, 0.0, -0.7j])
    f = _box_field(1.0, 64, _gaussian_rule(s, u))
    out = heat_semigroup(f, 3e-3)
    h3 = f.grid.cell_volume()
    for comp in range(4):
        before = f.values[comp].sum() * h3
        after = out.values[comp].sum() * h3
        if abs(before) == 0.0:
            assert abs(after) <= 1e-15
        else:
            assert abs(after - before) / abs(before) <= 1e-8


def test_heat_semigroup_property():
    f = _box_field(16.0, 64, _gaussian_rule(0.8, [1.0, 0.5j, -0.25, 0.0]))
    den = np.sqrt(quadrature(f, 2))
    for s, t in ((1e-3, 1e-3), (0.5, 1.0)):
        once = heat_semigroup(f, s + t)
        twice = heat_semigroup(heat_semigroup(f, s), t)
        num = np.sqrt(
            quadrature(SpinorField(f.grid, f.mask, once.values - twice.values), 2)
        )
        assert num / den <= 1e-8


def test_heat_commutes_with_dirac():
    f = _box_field(16.0, 64, _gaussian_rule(0.8, [1.0, -1.0, 0.5j, 0.25]))
    den = np.sqrt(quadrature(f, 2))
    t = 0.5
    a = apply_dirac(heat_semigroup(f, t))
    b = heat_semigroup(apply_dirac(f), t)
    num = np.sqrt(quadrature(SpinorField(f.grid, f.mask, a.values - b.values), 2))
    assert num / den <= 1e-8


def test_heat_contraction_in_p_norms():
    rng = np.random.default_rng(17)
    grid = make_grid(1.0, 32)
    mask = full_box_mask(grid)
    spec = np.zeros((4, 32, 32, 32), dtype=np.complex128)
    spec[:, :5, :5, :5] = rng.standard_normal((4, 5, 5, 5)) + 1j * rng.standard_normal(
        (4, 5, 5, 5)
    )
    f = SpinorField(grid, mask, np.fft.ifftn(spec, axes=(1, 2, 3)))
    for t in (0.01, 0.1):
        out = heat_semigroup(f, t)
        for p in (1, 2):
            assert quadrature(out, p) ** (1 / p) <= (1 + 1e-8) * quadrature(f, p) ** (
                1 / p
            )
        assert sup_norm(out) <= (1 + 1e-8) * sup_norm(f)


def test_heat_warning_note_for_large_time():
    f = _box_field(1.0, 16, _gaussian_rule(0.05, [1.0, 0, 0, 0]))
    assert heat_semigroup(f, 0.2).notes == ()
    noisy = heat_semigroup(f, 0.3)
    assert noisy.notes and "sqrt(t)" in noisy.notes[0]


def test_smoothing_slope_plate_indicator():
    # interface smoothing: sup |alpha.p P_s g| for a plate indicator decays
    # like s^(-1/2); checked against the 1D image-sum closed form.
    half_width, points, a = 1.5, 96, 0.4
    grid = make_grid(half_width, points)
    mask = full_box_mask(grid)

    def rule(x1, x2, x3):
        out = np.zeros((4,) + x1.shape, dtype=np.complex128)
        out[0] = (np.abs(x1) <= a).astype(np.complex128)
        return out

    g = sample_field(grid, mask, rule)
    prop = HeatPropagator(g)
    svals = np.geomspace(1e-3, 1e-1, 8)
    sups = np.array([sup_norm(apply_dirac(prop.at(float(s)))) for s in svals])

    oracle = []
    for s in svals:
        xs = np.linspace(-half_width, half_width, 4001)
        du = np.zeros_like(xs)
        pref = (4.0 * np.pi * s) ** -0.5
        for m in range(-3, 4):
            du += pref * (
                np.exp(-((xs + a - 4 * half_width * m) ** 2) / (4 * s))
                - np.exp(-((xs - a - 4 * half_width * m) ** 2) / (4 * s))
            )
        oracle.append(np.abs(du).max())
    oracle = np.array(oracle)

    assert (np.abs(sups - oracle) / oracle).max() <= 0.06
    slope = np.polyfit(np.log(svals), np.log(sups), 1)[0]
    oracle_slope = np.polyfit(np.log(svals), np.log(oracle), 1)[0]
    assert abs(slope - oracle_slope) <= 0.05
    assert -0.6 <= slope <= -0.4


def test_difference_quotient_slope_suite():
    # || f - P_t f ||_2 / || alpha.p f ||_2 over a 50-bump suite pools to
    # slope ~ 1/2 in log t; the Gaussian closed form gives an exact oracle.
    grid = make_grid(1.0, 48)
    mask = full_box_mask(grid)
    ts = np.geomspace(1e-4, 1e-1, 9)
    rng = np.random.default_rng(11)
    widths = np.exp(rng.uniform(np.log(1e-3), np.log(1e-2), 50))

    def oracle_ratio(s, t):
        big_a = (2 * np.pi * s) ** 1.5
        big_b = (4 * np.pi * s * (s + t) / (2 * s + t)) ** 1.5
        big_c = (2 * np.pi * (s + t)) ** 1.5
        rho = (s / (s + t)) ** 1.5
        return np.sqrt(
            (big_a - 2 * rho * big_b + rho * rho * big_c) / ((3.0 / (4 * s)) * big_a)
        )

    pooled = np.zeros(ts.size)
    pooled_oracle = np.zeros(ts.size)
    for s in widths:
        center = rng.uniform(-0.1, 0.1, 3)
        u = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        f = sample_field(grid, mask, _gaussian_rule(s, u, center))
        den = np.sqrt(quadrature(apply_dirac(f), 2))
        prop = HeatPropagator(f)
        for i, t in enumerate(ts):
            g = prop.at(float(t))
            diff = SpinorField(grid, mask, f.values - g.values)
            pooled[i] += np.log(np.sqrt(quadrature(diff, 2)) / den)
            pooled_oracle[i] += np.log(oracle_ratio(s, float(t)))
    pooled /= widths.size
    pooled_oracle /= widths.size

    slope = np.polyfit(np.log(ts), pooled, 1)[0]
    oracle_slope = np.polyfit(np.log(ts), pooled_oracle, 1)[0]
    assert abs(slope - oracle_slope) <= 0.02
    assert 0.4 <= slope <= 0.6


def test_sup_norm_basics():
    f = _box_field(1.0, 16, lambda x1, x2, x3: 3.0 * np.ones((4,) + x1.shape, dtype=np.complex128))
    assert sup_norm(f) == pytest.approx(6.0)  # |(3,3,3,3)| = 3*2

    g = _box_field(1.0, 16, _gaussian_rule(0.5, [1.0, 0, 0, 0]))
    x1, x2, x3 = g.grid.coords()
    r2 = x1**2 + x2**2 + x3**2
    assert sup_norm(g) == pytest.approx(np.exp(-r2.min() / 2.0))

    zero = _box_field(1.0, 8, lambda x1, x2, x3: np.zeros((4,) + x1.shape, dtype=np.complex128))
    assert sup_norm(zero) == 0.0


def test_sup_norm_empty_mask_error():
    grid = make_grid(1.0, 8)
    mask = full_box_mask(grid)
    empty = type(mask)(mask.kind, mask.params, np.zeros_like(mask.inside), 0)
    f = SpinorField(grid, empty, np.zeros((4, 8, 8, 8), dtype=np.complex128))
    with pytest.raises(ValueError, match="empty"):
        sup_norm(f)
