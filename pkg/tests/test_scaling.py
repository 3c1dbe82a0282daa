import math

import numpy as np
import pytest

from qest.probespec import parse_probe_spec
from qest.scaling import binomial_regressor, fit_exponent, scaling_sweep


def test_regressor_reduces_to_log_n():
    ns = np.arange(1, 9)
    assert np.allclose(binomial_regressor(ns, 1), np.log(ns))


def test_fit_recovers_power_law():
    ns = [2, 3, 4, 5, 6]
    for k in (1, 2, 3):
        ns_k = [n for n in ns if n >= k]
        vals = [3.7 * math.comb(n, k) for n in ns_k]
        corrected, naive, resid = fit_exponent(ns_k, vals, k)
        assert corrected == pytest.approx(k, abs=1e-9) and resid < 1e-12


def test_bound_mode_exponents():
    sep = parse_probe_spec("probe { n=2; coupling=product(Z); }")
    r = scaling_sweep(sep, range(2, 9), "bound")
    assert abs(r.exponent - 1) < 1e-6 and abs(r.naive_exponent - 1) < 1e-6
    k2 = parse_probe_spec("probe { n=2; k=2; coupling=product(0.5*(I+Z)); }")
    r = scaling_sweep(k2, range(2, 9), "bound")
    assert abs(r.exponent - 2) < 1e-6
    assert r.naive_exponent > 2.1  # finite-N bias of the plain log N fit
    assert [row.N for row in r.rows] == list(range(2, 9))


def test_qfi_mode_shot_noise():
    prod = parse_probe_spec("probe { n=1; coupling=product(Z); state=product(1, 1); }")
    r = scaling_sweep(prod, range(1, 9), "qfi")
    assert r.exponent == pytest.approx(0.5, abs=0.05)


def test_rows_skipped_beyond_cap(monkeypatch, caplog):
    monkeypatch.setenv("QEST_DIM_CAP", "32")
    sep = parse_probe_spec("probe { n=2; coupling=product(Z); }")
    r = scaling_sweep(sep, range(2, 8), "bound")
    assert r.skipped == (6, 7) and [row.N for row in r.rows] == [2, 3, 4, 5]
    assert "skipping N=6" in caplog.text


def test_table_columns():
    sep = parse_probe_spec("probe { n=2; coupling=product(Z); }")
    t = scaling_sweep(sep, [2, 3], "bound").table()
    assert list(t[0]) == ["N", "seminorm_h0", "qfi", "bound", "delta_mc", "exponent_fit"]
