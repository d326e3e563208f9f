import json

import pytest
from hypothesis import given, strategies as st

from wgfock.emitter import EmitterSpec, kerr_spec, spec_from_dict, spec_from_json, superradiant_spec


def test_superradiant_n1():
    spec = superradiant_spec(1, 1.0, 0.0)
    assert spec.gamma == (0.0, 1.0)
    assert spec.omega == (0.0, 0.0)


def test_superradiant_n3_rates_and_frequencies():
    spec = superradiant_spec(3, 1.0, 2.0)
    assert spec.gamma == (0.0, 3.0, 4.0, 3.0)
    assert spec.omega == (0.0, 2.0, 4.0, 6.0)


def test_superradiant_large_n_midpoint():
    spec = superradiant_spec(100, 1.0, 0.0)
    assert spec.gamma[50] == 50 * 51


@given(st.integers(min_value=1, max_value=60))
def test_superradiant_rate_symmetry(N):
    spec = superradiant_spec(N)
    for n in range(1, N + 1):
        assert spec.gamma[n] == spec.gamma[N - n + 1]


def test_kerr_n2():
    spec = kerr_spec(2, 1.0, 1.0, 0.5)
    assert spec.omega == (0.0, 1.0, 3.0)
    assert spec.gamma == (0.0, 1.0, 2.0)


def test_kerr_n1_equals_superradiant():
    assert kerr_spec(1, 2.0, 0.7, U=99.0) == superradiant_spec(1, 2.0, 0.7)


def test_kerr_n3():
    spec = kerr_spec(3, 2.0, 0.0, 1.0)
    assert spec.omega == (0.0, 0.0, 2.0, 6.0)
    assert spec.gamma == (0.0, 2.0, 4.0, 6.0)


@pytest.mark.parametrize("bad_n", [0, -1])
def test_presets_reject_bad_n(bad_n):
    with pytest.raises(ValueError):
        superradiant_spec(bad_n)
    with pytest.raises(ValueError):
        kerr_spec(bad_n)


@pytest.mark.parametrize("bad_rate", [0.0, -1.0])
def test_presets_reject_bad_rate(bad_rate):
    with pytest.raises(ValueError):
        superradiant_spec(3, bad_rate)
    with pytest.raises(ValueError):
        kerr_spec(3, bad_rate)


def test_invariants_enforced():
    with pytest.raises(ValueError):
        EmitterSpec(N=2, omega=(0.0, 1.0), gamma=(0.0, 1.0, 2.0))  # wrong length
    with pytest.raises(ValueError):
        EmitterSpec(N=2, omega=(0.5, 1.0, 2.0), gamma=(0.0, 1.0, 2.0))  # omega_0 != 0
    with pytest.raises(ValueError):
        EmitterSpec(N=2, omega=(0.0, 1.0, 2.0), gamma=(0.0, 0.0, 2.0))  # gamma_1 = 0


def test_json_round_trip_explicit():
    spec = kerr_spec(4, 1.5, 0.3, 0.2)
    again = spec_from_json(spec.to_json())
    assert again == spec


def test_json_presets():
    spec = spec_from_dict({"preset": "superradiant", "N": 3, "Gamma1d": 2.0, "omega0": 1.0})
    assert spec == superradiant_spec(3, 2.0, 1.0)
    spec = spec_from_dict({"preset": "kerr", "N": 2, "Gamma1d": 1.0, "omega_a": 0.5, "U": 0.1})
    assert spec == kerr_spec(2, 1.0, 0.5, 0.1)
    with pytest.raises(ValueError):
        spec_from_dict({"preset": "unknown", "N": 2})
