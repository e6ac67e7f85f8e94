import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcaseg.core import (
    DEFAULT_WEIGHTS,
    ConfigError,
    SignalInstance,
    SignalRangeError,
    WeightMatrix,
    transform_signals,
    validate_weights,
)

signal_value = st.floats(min_value=0.0, max_value=100.0, allow_nan=False)


@pytest.mark.parametrize(
    "pamp, danger, safe, csm, k",
    [
        (0, 0, 0, 0, 0),
        (1, 1, 1, 12, -1),
        (100, 0, 0, 400, 800),
        (0, 0, 100, 600, -1300),
    ],
)
def test_transform_spot_values(pamp, danger, safe, csm, k):
    out = transform_signals(SignalInstance(0, pamp, danger, safe))
    assert out.csm == csm
    assert out.k == k


def test_default_weights_match_standard_table():
    assert DEFAULT_WEIGHTS.csm_row == (4, 2, 6)
    assert DEFAULT_WEIGHTS.k_row == (8, 4, -13)


@pytest.mark.parametrize("component", ["pamp", "danger", "safe"])
@pytest.mark.parametrize("value", [-0.001, 100.5, float("nan")])
def test_out_of_range_component_named(component, value):
    kwargs = {"pamp": 1.0, "danger": 1.0, "safe": 1.0, component: value}
    with pytest.raises(SignalRangeError, match=component):
        transform_signals(SignalInstance(0, **kwargs))


def test_validate_weights():
    assert validate_weights(DEFAULT_WEIGHTS).valid
    bad_safe = validate_weights(WeightMatrix(w_k_safe=13.0))
    assert not bad_safe
    assert "safe k-weight must be negative" in bad_safe.violations
    swapped = validate_weights(WeightMatrix(w_k_pamp=4.0, w_k_danger=8.0))
    assert swapped.violations == ("PAMP must outweigh danger",)


def test_weight_dict_round_trip():
    w = WeightMatrix(1, 2, 3, 9, 5, -1)
    assert WeightMatrix.from_dict(w.to_dict()) == w
    with pytest.raises(ConfigError):
        WeightMatrix.from_dict({"csm": [1, 2]})


@given(signal_value, signal_value, signal_value, st.floats(0.0, 1.0))
def test_linearity(p, d, s, a):
    base = transform_signals(SignalInstance(0, p, d, s))
    scaled = transform_signals(SignalInstance(0, a * p, a * d, a * s))
    assert scaled.csm == pytest.approx(a * base.csm, rel=1e-12, abs=1e-9)
    assert scaled.k == pytest.approx(a * base.k, rel=1e-12, abs=1e-9)


@given(st.floats(0, 50), st.floats(0, 50), st.floats(0, 50),
       st.floats(0, 50), st.floats(0, 50), st.floats(0, 50))
def test_additivity(p1, d1, s1, p2, d2, s2):
    a = transform_signals(SignalInstance(0, p1, d1, s1))
    b = transform_signals(SignalInstance(0, p2, d2, s2))
    ab = transform_signals(SignalInstance(0, p1 + p2, d1 + d2, s1 + s2))
    assert ab.csm == pytest.approx(a.csm + b.csm, rel=1e-12, abs=1e-9)
    assert ab.k == pytest.approx(a.k + b.k, rel=1e-12, abs=1e-9)


@given(signal_value, signal_value, st.floats(0, 99), st.floats(0.01, 1))
def test_more_safe_lowers_k_raises_csm(p, d, s, bump):
    lo = transform_signals(SignalInstance(0, p, d, s))
    hi = transform_signals(SignalInstance(0, p, d, s + bump))
    assert hi.k < lo.k
    assert hi.csm > lo.csm


@given(signal_value, signal_value, signal_value)
def test_csm_non_negative_with_defaults(p, d, s):
    assert transform_signals(SignalInstance(0, p, d, s)).csm >= 0
