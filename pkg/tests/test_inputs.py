"""Stroke kernels, gated diffusion, and support aggregation."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segctl.errors import EmptySeedError, NonFiniteFieldError, StrokeBoundsError
from segctl.inputs import (
    Stroke,
    accumulate_distance,
    accumulate_region,
    diffuse,
    diffusion_dt,
    stroke_kernel,
)

from oracles import bellman_ford


def test_stroke_validation():
    with pytest.raises(EmptySeedError):
        Stroke(label=1, voxels=())
    s = Stroke(label=1, voxels=((0, 0), (0, 1)))
    s.check_bounds((2, 2))
    with pytest.raises(StrokeBoundsError):
        s.check_bounds((1, 1))


def test_kernel_is_one_on_stroke():
    g = np.ones((3, 3))
    s = Stroke(label=1, voxels=((1, 1),))
    k = stroke_kernel(s, g, d_max=4.0)
    assert k[1, 1] == 1.0


def test_kernel_halves_at_half_range():
    g = np.ones((1, 9))
    s = Stroke(label=1, voxels=((0, 0),))
    k = stroke_kernel(s, g, d_max=4.0)
    assert k[0, 2] == pytest.approx(0.5)  # geodesic distance 2 = d_max/2
    assert k[0, 1] == pytest.approx(0.75)


def test_kernel_zero_beyond_range():
    g = np.ones((1, 9))
    s = Stroke(label=1, voxels=((0, 0),))
    k = stroke_kernel(s, g, d_max=4.0)
    np.testing.assert_array_equal(k[0, 4:], np.zeros(5))


def test_kernel_requires_positive_range():
    with pytest.raises(ValueError):
        stroke_kernel(Stroke(1, ((0, 0),)), np.ones((2, 2)), d_max=0.0)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_kernel_level_sets_are_geodesic_balls(seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(1, 10, size=(5, 5))
    vox = tuple(map(int, rng.integers(0, 5, size=2)))
    s = Stroke(label=1, voxels=(vox,))
    d_max = 6.0
    k = stroke_kernel(s, g, d_max)
    d_oracle = bellman_ford(g, [vox])
    np.testing.assert_allclose(k, np.clip((d_max - d_oracle) / d_max, 0.0, 1.0), rtol=1e-9)
    assert (k >= 0).all() and (k <= 1).all()


def test_diffuse_zero_is_fixed_point():
    u = np.zeros((4, 4))
    out = diffuse(u, np.ones((4, 4)), steps=10, dt=0.2)
    np.testing.assert_array_equal(out, np.zeros((4, 4)))


def test_diffuse_uniform_is_pure_growth():
    gm = np.full((4, 4), 10.0)
    u = np.full((4, 4), 0.5)
    dt = 0.2
    out = diffuse(u, gm, steps=1, dt=dt)
    np.testing.assert_allclose(out, 0.5 * (1 + dt))
    out5 = diffuse(u, gm, steps=5, dt=dt)
    np.testing.assert_allclose(out5, 0.5 * (1 + dt) ** 5)


def test_diffuse_spike_spreads_and_decays():
    gm = np.ones((5, 5))
    u = np.zeros((5, 5))
    u[2, 2] = 2.0  # twice the local bound -> gate fully open at the spike
    dt = diffusion_dt((1.0, 1.0))
    out = diffuse(u, gm, steps=1, dt=dt)
    assert out[2, 2] < 2.0
    for idx in [(1, 2), (3, 2), (2, 1), (2, 3)]:
        assert out[idx] > 0.0
    # diagonal neighbors receive nothing from a single 5-point step
    assert out[1, 1] == 0.0


def test_diffuse_clamps_to_cap():
    u = np.full((3, 3), 3.9)
    out = diffuse(u, np.full((3, 3), 100.0), steps=3, dt=0.3)
    assert out.max() <= 4.0


def test_diffuse_open_gate_on_flat_image():
    gm = np.zeros((1, 5))
    u = np.array([[0.0, 0.0, 1.0, 0.0, 0.0]])
    out = diffuse(u, gm, steps=1, dt=0.25)
    assert out[0, 1] > 0 and out[0, 3] > 0  # gate open despite u << any bound


def test_diffuse_rejects_nonfinite():
    u = np.array([[np.inf, 0.0]])
    with pytest.raises(NonFiniteFieldError):
        diffuse(u, np.ones((1, 2)), steps=1, dt=0.1)


def test_accumulate_region_values():
    u = {1: np.array([0.8]), 2: np.array([0.0])}
    assert accumulate_region(u, 1)[0] == pytest.approx(0.8)
    u = {1: np.array([0.8]), 2: np.array([0.3])}
    assert accumulate_region(u, 1)[0] == pytest.approx(0.5)
    u = {1: np.array([0.4]), 2: np.array([0.4])}
    assert accumulate_region(u, 1)[0] == 0.0


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_accumulate_region_antisymmetric_for_two_labels(seed):
    rng = np.random.default_rng(seed)
    u = {1: rng.uniform(0, 2, size=(3, 3)), 2: rng.uniform(0, 2, size=(3, 3))}
    np.testing.assert_allclose(accumulate_region(u, 1), -accumulate_region(u, 2))


def test_accumulate_distance_margin():
    d = {1: np.array([2.0]), 2: np.array([5.0])}
    assert accumulate_distance(d, 1)[0] == pytest.approx(3.0)
    assert accumulate_distance(d, 2)[0] == pytest.approx(-3.0)
    d = {1: np.array([0.0]), 2: np.array([4.0])}
    assert accumulate_distance(d, 1)[0] == pytest.approx(4.0)
    d = {1: np.array([3.0]), 2: np.array([3.0])}
    assert accumulate_distance(d, 1)[0] == 0.0


def test_sign_on_fresh_stroke_voxels_positive_both_variants():
    g = np.ones((1, 7))
    s = Stroke(label=1, voxels=((0, 2), (0, 3)))
    kern = stroke_kernel(s, g, d_max=3.0)
    u = {1: kern, 2: np.zeros((1, 7))}
    U1 = accumulate_region(u, 1)
    assert (U1[0, 2:4] > 0).all()
    from segctl.distance import seed_distance

    d = {1: seed_distance(g, s.voxels), 2: seed_distance(g, [(0, 6)])}
    U1d = accumulate_distance(d, 1)
    assert (U1d[0, 2:4] > 0).all()
