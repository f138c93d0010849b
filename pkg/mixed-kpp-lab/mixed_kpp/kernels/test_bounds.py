import json

import numpy as np
import pytest

from mixed_kpp.errors import KernelError
from mixed_kpp.grid import make_grid
from mixed_kpp.kernels import (
    KernelBoundSpec,
    KernelKind,
    Region,
    check_chapman_kolmogorov,
    check_factorization,
    check_oracle,
    check_scaling,
    check_sup_decay,
    check_table_invariants,
    check_tail_law,
    check_two_sided_bounds,
    classify_regions,
    fractional_kernel,
    gaussian_kernel,
    mixed_kernel,
    q_envelopes,
)
from mixed_kpp.reports import dumps


@pytest.fixture(scope="module")
def tail_grid():
    # dx = 1/2 resolves the mixed kernel at t = 2 and leaves room for |x| > 5 t^(1/(2s))
    return make_grid(1, 4096, 1024.0)


def test_invariants_report():
    grid = make_grid(1, 4096, 64.0)
    report = check_table_invariants(mixed_kernel(grid, 1.0, 0.5))
    assert report.passed
    assert {c.name for c in report.checks} == {"mass", "symmetry", "positivity"}


def test_bound_spec_requires_b_at_least_one():
    with pytest.raises(KernelError):
        KernelBoundSpec(B=0.5)
    assert KernelBoundSpec.default(1, 0.5).alpha == pytest.approx(2.0)


def test_regions():
    grid = make_grid(1, 1024, 4.0)
    labels = classify_regions(grid, 0.01, 0.5)
    c = grid.center_index()[0]
    assert labels[c + 6] == Region.SHORT_NEAR
    assert labels[c + 64] == Region.SHORT_MID
    assert labels[c + 1] == Region.SHORT_INNER
    assert labels[c + 256] == Region.LONG
    assert np.all(classify_regions(grid, 1.0, 0.5) == Region.LONG)


def test_envelopes_are_ordered():
    grid = make_grid(1, 2048, 8.0)
    q1, q2 = q_envelopes(grid, 0.05, 0.5)
    assert np.all(q1 <= q2)


@pytest.mark.parametrize("s, t", [(0.5, 4.0), (0.75, 4.0), (0.5, 0.5)])
def test_scaling(s, t):
    grid = make_grid(1, 4096, 64.0)
    report = check_scaling(fractional_kernel(grid, t, s))
    assert report.passed, report.to_dict()


def test_scaling_identity_case():
    grid = make_grid(1, 4096, 64.0)
    report = check_scaling(fractional_kernel(grid, 1.0, 0.5))
    assert report.get("scaling_deviation").stat == 0.0


def test_scaling_rejects_gaussian():
    grid = make_grid(1, 1024, 32.0)
    with pytest.raises(KernelError):
        check_scaling(gaussian_kernel(grid, 1.0))


@pytest.mark.parametrize("kind, t, tau", [(KernelKind.FRACTIONAL, 1.0, 1.0), (KernelKind.MIXED, 0.5, 1.5)])
def test_chapman_kolmogorov(kind, t, tau):
    report = check_chapman_kolmogorov(kind, t, tau, s=0.5)
    assert report.passed, report.to_dict()


def test_chapman_kolmogorov_short_step():
    report = check_chapman_kolmogorov(KernelKind.MIXED, 1.0, 1e-4, s=0.5)
    assert report.get("change_from_t").stat <= 1e-3


@pytest.mark.parametrize("t, s", [(1.0, 0.5), (0.5, 0.75)])
def test_factorization(t, s):
    grid = make_grid(1, 4096, 64.0)
    assert check_factorization(grid, t, s).passed


def test_fractional_B_is_stable_under_refinement():
    fits = []
    for n in (4096, 8192):
        report = check_two_sided_bounds(fractional_kernel(make_grid(1, n, 64.0), 1.0, 0.5))
        assert report.passed
        fits.append(report.get("fitted_B").stat)
    assert all(B >= 1.0 for B in fits)
    assert fits[1] == pytest.approx(fits[0], rel=0.01)


def test_bounds_report_serializes(tail_grid):
    fractional = check_two_sided_bounds(fractional_kernel(make_grid(1, 4096, 64.0), 1.0, 0.5))
    encoded = json.loads(dumps(fractional))
    assert encoded["data"]["spec"]["B"] >= 1.0
    assert encoded["data"]["kind"] == "fractional"

    mixed = json.loads(dumps(check_two_sided_bounds(mixed_kernel(tail_grid, 2.0, 0.5))))
    assert mixed["data"]["spec"]["region"] is None
    assert mixed["data"]["spec"]["M"] == mixed["data"]["M"]


def test_mixed_tail_ratio(tail_grid):
    report = check_two_sided_bounds(mixed_kernel(tail_grid, 2.0, 0.5))
    assert report.passed, report.to_dict()
    assert report.get("tail_ratio_constancy").stat <= 1.1
    # the limit matches C_{1,1/2} = 1/pi, not the alpha = 2 bracket
    assert report.get("tail_limit_vs_C").stat == pytest.approx(1.0, abs=0.05)
    assert report.get("tail_limit_vs_alpha").details["inside_bracket"] is False


def test_short_time_harnack_constant():
    grid = make_grid(1, 8192, 16.0)
    report = check_two_sided_bounds(mixed_kernel(grid, 0.1, 0.5))
    assert np.isfinite(report.get("fitted_harnack_C").stat)


def test_empty_tail_window():
    grid = make_grid(1, 64, 8.0)
    with pytest.raises(KernelError):
        check_two_sided_bounds(mixed_kernel(grid, 2.0, 0.5))


@pytest.mark.parametrize("window", [None, (50.0, 400.0)])
def test_tail_law(tail_grid, window):
    report = check_tail_law(mixed_kernel(tail_grid, 2.0, 0.5), window=window)
    assert report.passed, report.to_dict()
    assert report.get("tail_slope").details["slope"] == pytest.approx(-2.0, rel=0.02)


def test_tail_coefficient_against_C_is_recorded(tail_grid):
    # the far-field coefficient only nears C t at much larger |x| when s is small
    report = check_tail_law(mixed_kernel(tail_grid, 2.0, 0.25), window=(50.0, 400.0))
    recorded = report.get("tail_coefficient_vs_C")
    assert recorded.passed
    assert np.isnan(recorded.tol)
    assert recorded.details["C"] > 0
    assert report.get("tail_vs_oracle").passed, report.to_dict()


def test_sup_decay():
    grid = make_grid(1, 2**16, 2.0**17)
    report = check_sup_decay(grid, 0.5)
    assert report.passed, report.to_dict()
    assert report.get("decay_exponent").details["stated_exponent"] == 1.0


@pytest.mark.parametrize("kind", [KernelKind.MIXED, KernelKind.FRACTIONAL])
def test_oracle_agreement(kind):
    grid = make_grid(1, 4096, 64.0)
    table = mixed_kernel(grid, 1.0, 0.75) if kind is KernelKind.MIXED else fractional_kernel(grid, 1.0, 0.75)
    report = check_oracle(table, points=32, seed=7)
    assert report.passed, report.to_dict()


if __name__ == "__main__":
    pytest.main([__file__])
