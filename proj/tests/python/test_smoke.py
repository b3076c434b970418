import math

import pytest

import fbq


def test_chi_square_constants():
    d = fbq.chi_square_facts(3)
    assert d.rho == pytest.approx(1.0)
    assert d.eta == 2.0
    assert d.inverse_cdf(d.cdf(2.5)) == pytest.approx(2.5, rel=1e-9)
    with pytest.raises(ArithmeticError):
        fbq.chi_square_facts(2)


def test_magnitude_codebook_bound():
    d = fbq.chi_square_facts(3)
    cb = fbq.build_uniform_db(64, 0.025, d)
    assert len(cb) == 64
    assert cb.levels[0] == pytest.approx(d.inverse_cdf(0.025))
    assert fbq.expected_inverse_quantized(cb, d) < fbq.expected_inverse_bound(cb, d)


def test_grassmannian_codebook():
    cb = fbq.build_grassmannian(16, 3, seed=4)
    w = cb.codewords
    assert w.shape == (16, 3)
    assert all(abs(math.fsum(x * x for x in row) - 1.0) < 1e-12 for row in w)
    assert 0.0 < cb.min_chordal_distance < 1.0


def test_allocation_conserves_budget():
    a = fbq.allocate_bits(90.0, [2, 5, 8], [0.1, 0.1, 0.1], 3)
    assert sum(a["total_bits"]) == pytest.approx(90.0)
    assert a["total_bits"][2] > a["total_bits"][0]
    with pytest.raises(ValueError):
        fbq.allocate_bits(90.0, [2, 5], [0.1, 0.1, 0.1], 3)


def test_closed_form_single_user_and_infeasible():
    p = fbq.closed_form_robust([2.0, 2.0, 2.0], [1.2, 1.2, 1.2], [0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
    assert p == pytest.approx([g / (2.0 * math.sin(1.2) ** 2) for g in (1.0, 2.0, 3.0)])
    assert fbq.closed_form_robust([1.0] * 3, [0.1] * 3, [0.2] * 3, [1.0] * 3) is None


def test_run_experiment_is_deterministic():
    cfg = "M = 3\ngamma_db = 2,5,8\nq = 0.1,0.1,0.1\nB_range = 60:80:10\n"
    cols = fbq.run_experiment("bit-shares", cfg)
    assert cols["B"] == [60.0, 70.0, 80.0]
    a = fbq.run_experiment_csv("bit-shares", cfg, seed=3)
    assert a == fbq.run_experiment_csv("bit-shares", cfg, seed=3)
    assert a.startswith("# fbq-sim ")
    with pytest.raises(ValueError):
        fbq.run_experiment("bit-shares", "bogus = 1\n")
