"""Surrogate functions and the straight-through spike operation."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikekit import arraycore as ac
from spikekit.errors import RangeError
from spikekit.surrogate import (SurrogateSpec, custom_surrogate, smooth_forward,
                                smooth_gradient, ste_spike)

FAST = SurrogateSpec(kind="fast_sigmoid", k=25.0)
ATAN = SurrogateSpec(kind="arctan", alpha=2.0)
STEP = SurrogateSpec(kind="straight_through", s=1.0)
ALL = (FAST, ATAN, STEP)


def grad_of_spike_sum(spec, values):
    x = ac.Tensor(values, requires_grad=True)
    with ac.Tape() as tape:
        s = ac.sum(ste_spike(spec, x))
    return ac.backward(tape, s)[x].data


class TestSmoothForward:
    def test_fast_sigmoid_at_zero(self):
        assert smooth_forward(FAST, ac.Tensor(0.0)).item() == 0.5

    def test_arctan_at_zero(self):
        assert smooth_forward(ATAN, ac.Tensor(0.0)).item() == 0.5

    def test_straight_through_saturates(self):
        assert smooth_forward(STEP, ac.Tensor(0.7)).item() == 1.0

    def test_all_builtins_monotone_and_half_at_zero(self):
        xs = np.linspace(-3, 3, 601)
        for spec in ALL:
            vals = smooth_forward(spec, ac.Tensor(xs)).data
            assert np.all(np.diff(vals) >= 0.0)
            assert vals[300] == 0.5


class TestSmoothGradient:
    def test_fast_sigmoid_peak(self):
        assert smooth_gradient(FAST, ac.Tensor(0.0)).item() == 12.5

    def test_arctan_peak(self):
        val = smooth_gradient(ATAN, ac.Tensor(0.0)).item()
        assert val == pytest.approx(2.0 / np.pi, abs=1e-12)

    def test_straight_through_outside_window(self):
        assert smooth_gradient(STEP, ac.Tensor(0.7)).item() == 0.0

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_matches_finite_differences_of_smooth_forward(self, spec):
        h = 1e-6
        rng = np.random.default_rng(17)
        xs = rng.uniform(-2, 2, size=2000)
        if spec.kind == "straight_through":
            z = spec.s * xs + 0.5
            xs = xs[(np.abs(z) > 1e-3) & (np.abs(z - 1.0) > 1e-3)]
        up = smooth_forward(spec, ac.Tensor(xs + h)).data
        dn = smooth_forward(spec, ac.Tensor(xs - h)).data
        fd = (up - dn) / (2 * h)
        an = smooth_gradient(spec, ac.Tensor(xs)).data
        mask = np.abs(an) > 1e-12
        assert np.all(np.abs(fd[mask] - an[mask]) / np.abs(an[mask]) <= 1e-6)
        assert np.all(np.abs(fd[~mask] - an[~mask]) <= 1e-9)


class TestSteSpike:
    def test_forward_is_hard_step_not_smooth(self):
        assert ste_spike(FAST, ac.Tensor(0.3)).item() == 1.0
        assert ste_spike(FAST, ac.Tensor(-0.3)).item() == 0.0

    def test_zero_input_uses_strict_convention(self):
        assert ste_spike(FAST, ac.Tensor(0.0)).item() == 0.0
        assert ste_spike(FAST, ac.Tensor(0.0), include_zero=True).item() == 1.0

    def test_gradient_at_zero_fast_sigmoid(self):
        g = grad_of_spike_sum(FAST, np.array([0.0]))
        assert g[0] == 12.5

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_bit_exact_binarity(self, spec):
        x = np.random.default_rng(23).normal(0, 1.5, size=100_000)
        out = ste_spike(spec, ac.Tensor(x)).data
        assert np.all((out == 0.0) | (out == 1.0))
        assert np.array_equal(out, (x > 0).astype(np.float64))

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_backward_equals_closed_form_on_1000_points(self, spec):
        x = np.random.default_rng(29).uniform(-2, 2, size=1000)
        g = grad_of_spike_sum(spec, x)
        want = smooth_gradient(spec, ac.Tensor(x)).data
        assert np.max(np.abs(g - want)) <= 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-50, 50, allow_nan=False))
    def test_binarity_property(self, v):
        for spec in ALL:
            assert ste_spike(spec, ac.Tensor(v)).item() in (0.0, 1.0)

    def test_smooth_mode_returns_surrogate_value(self):
        spec = SurrogateSpec(kind="fast_sigmoid", k=25.0, smooth=True)
        x = ac.Tensor(0.3)
        out = ste_spike(spec, x)
        assert out.item() == smooth_forward(spec, x).item() != 1.0


class TestCustomSurrogate:
    def test_factory_round_trip(self):
        spec = custom_surrogate(
            fn=lambda x: 1.0 / (1.0 + np.exp(-4.0 * x)),
            grad_fn=lambda x: 4.0 * np.exp(-4.0 * x) / (1.0 + np.exp(-4.0 * x)) ** 2,
        )
        x = np.array([-0.5, 0.0, 0.5])
        out = ste_spike(spec, ac.Tensor(x)).data
        assert np.array_equal(out, [0.0, 0.0, 1.0])
        g = grad_of_spike_sum(spec, x)
        assert g[1] == pytest.approx(1.0, abs=1e-12)  # derivative at 0 is k/4 = 1

    def test_custom_requires_both_functions(self):
        with pytest.raises(RangeError):
            SurrogateSpec(kind="custom", custom_fn=lambda x: x)


class TestValidation:
    def test_rejects_bad_kind(self):
        with pytest.raises(RangeError):
            SurrogateSpec(kind="triangle")

    def test_rejects_nonpositive_slopes(self):
        with pytest.raises(RangeError):
            SurrogateSpec(k=-1.0)
