import numpy as np
import pytest

import spdc


def test_budget_table():
    b = spdc.herald_budget(6.1340625, 0.5821875, 1.4428125, 0.2784375)
    assert [round(b[k], 3) for k in ("signal", "thermal", "dcr", "leak")] == [0.727, 0.069, 0.171, 0.033]
    assert f"{b['p_click']:.1e}" == "2.7e-06"


def test_compose_invert_round_trip():
    c = np.array([[1.0, 0.1 + 0.05j, 0.02 - 0.03j], [0, 0.3, 0.04 + 0.01j], [0, 0, 0.18]], dtype=complex)
    c = np.triu(c) + np.triu(c, 1).conj().T
    h = spdc.noise_moments(2.5)
    assert h[1, 1].real == pytest.approx(3.5)
    assert h[2, 2].real == pytest.approx(2 * 3.5**2)
    for gain in (1.0, 40.0, 1e9):
        back = spdc.invert_moments(spdc.compose_moments(c, gain, h), gain, h)
        assert np.max(np.abs(back - c)) < 1e-12


def test_photon_added_thermal():
    nbar = 0.25
    p = np.asarray(spdc.photon_added_thermal(nbar))
    n = np.arange(p.size)
    mean = (n * p).sum()
    x = nbar / (nbar + 1)
    assert mean == pytest.approx(2 * nbar + 1, rel=1e-10)
    assert (n * (n - 1) * p).sum() / mean**2 == pytest.approx(2 * x * (2 + x) / (1 + x) ** 2, rel=1e-8)


def test_thermal_pipeline_and_bootstrap():
    gain, n_add = 7.0, 0.5
    sig = spdc.sample_heterodyne("thermal", 1.0, n_add, gain, 200_000, seed=1)
    noise = spdc.sample_heterodyne("thermal", 0.0, n_add, gain, 200_000, seed=2)
    assert sig.dtype == np.complex128 and sig.shape == (200_000,)
    n_h = spdc.estimate_noise_occupation(noise, gain)
    assert n_h == pytest.approx(n_add, abs=0.02)
    c = spdc.invert_moments(spdc.raw_moments(sig), gain, spdc.noise_moments(n_h))
    assert c[1, 1].real == pytest.approx(1.0, abs=0.03)
    b = spdc.bootstrap_g2(sig, gain, n_h, n_boot=300, seed=5)
    assert b["ci_low"] < b["value"] < b["ci_high"]
    assert abs(spdc.g2_cc(c) - 2.0) < 4 * b["stddev"]
    assert b == spdc.bootstrap_g2(sig, gain, n_h, n_boot=300, seed=5)
    assert b != spdc.bootstrap_g2(sig, gain, n_h, n_boot=300, seed=6)


def test_seeded_sampling_is_reproducible():
    a = spdc.sample_heterodyne("fock", 1, 2.5, 1.0, 1000, seed=9)
    b = spdc.sample_heterodyne("fock", 1, 2.5, 1.0, 1000, seed=9)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, spdc.sample_heterodyne("fock", 1, 2.5, 1.0, 1000, seed=10))


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        spdc.sample_heterodyne("squeezed", 1.0, 0.0, 1.0, 10, seed=0)
    with pytest.raises(spdc.ConfigError, match="unknown key"):
        spdc.config_hash(spdc.DEFAULT_CONFIG, {"pulse.nothing": "1"})
    with pytest.raises(ValueError):
        spdc.invert_moments(np.eye(3, 2, dtype=complex), 1.0, spdc.noise_moments(1.0))


def test_reference_simulation():
    r = spdc.simulate(spdc.DEFAULT_CONFIG)
    assert 3.4 <= r["g2_ac"] <= 4.5
    assert r["g2_bb_click_0"] <= r["g2_cc_click_mode"] <= r["g2_cc_click_internal"]
    assert len(r["delays"]) == len(r["conditional"]) == len(r["unconditional"])
    assert r["config_hash"] == spdc.config_hash(spdc.DEFAULT_CONFIG)
