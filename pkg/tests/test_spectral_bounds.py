import numpy as np
import pytest
from hypothesis import given, strategies as st

from ris_edof.channel_mc import (
    ChannelEnsemble,
    composite_eigs,
    ensemble_from_spectra,
    realization_stream,
    sample_hw,
)
from ris_edof.errors import ValidationError
from ris_edof.spectral_bounds import (
    REGIME_NT_APPROX_NR,
    REGIME_NT_MUCH_GREATER,
    REGIME_NT_MUCH_LESS,
    BoundTable,
    check_bounds,
    mp_edges,
    per_eig_bounds,
)


def test_mp_edges_square_case():
    assert mp_edges(1.0) == (0.0, 4.0)


def test_mp_edges_quarter_ratio():
    lo, hi = mp_edges(0.25)
    assert lo == pytest.approx(0.25)
    assert hi == pytest.approx(2.25)


def test_mp_edges_vanishing_ratio():
    lo, hi = mp_edges(1e-12)
    assert lo == pytest.approx(1.0, abs=1e-5)
    assert hi == pytest.approx(1.0, abs=1e-5)


def test_mp_edges_rejects_nonpositive():
    with pytest.raises(ValidationError):
        mp_edges(0.0)


@given(st.floats(min_value=1e-6, max_value=1e6))
def test_mp_edges_product_identity(eta):
    lo, hi = mp_edges(eta)
    assert lo * hi == pytest.approx((1 - eta) ** 2, rel=1e-9)


def test_single_index_upper_bound():
    table = per_eig_bounds(np.array([1.0]), np.array([1.0]), 1, 1)
    assert table.regime == REGIME_NT_APPROX_NR
    assert table.upper == pytest.approx([4.0])
    assert table.lower == pytest.approx([0.0])


def test_regime_selection_and_shapes():
    dt = np.full(4, 0.25)
    dr = np.full(400, 1 / 400)
    table = per_eig_bounds(dt, dr, 4, 400)
    assert table.regime == REGIME_NT_MUCH_LESS
    assert table.upper.shape == (400,)
    # indices beyond the transmit rank are pinned to zero
    assert np.all(table.upper[4:] == 0.0)
    assert np.all(table.lower[4:] == 0.0)

    table_big = per_eig_bounds(dr, dt, 400, 4)
    assert table_big.regime == REGIME_NT_MUCH_GREATER

    table_eq = per_eig_bounds(dt, np.full(5, 0.2), 4, 5)
    assert table_eq.regime == REGIME_NT_APPROX_NR


def test_much_less_regime_upper_matches_formula():
    rng = np.random.default_rng(0)
    dt = np.sort(rng.uniform(0.1, 1, 4))[::-1]
    dt /= dt.sum()
    dr = np.sort(rng.uniform(0.1, 1, 400))[::-1]
    dr /= dr.sum()
    table = per_eig_bounds(dt, dr, 4, 400)
    k = np.arange(4)
    expected = np.minimum(400 * dt[k] * dr[0], 400 * dr[k] * dt[0])
    assert table.upper[:4] == pytest.approx(expected)


def test_infinite_bounds_never_violate():
    ensemble = ensemble_from_spectra(
        np.ones(3) / 3, np.ones(3) / 3, realizations=20, seed=2
    )
    table = BoundTable(
        regime=REGIME_NT_APPROX_NR,
        lower=np.zeros(3),
        upper=np.full(3, np.inf),
        slack=0.0,
    )
    assert check_bounds(ensemble, table) == []


def test_violations_are_reported_with_indices():
    samples = np.array([[2.0, 1.0], [0.5, 0.4]])
    ensemble = ChannelEnsemble(
        n_t=2, n_r=2, seed=0, realizations=2, eig_samples=samples
    )
    table = BoundTable(
        regime=REGIME_NT_APPROX_NR,
        lower=np.zeros(2),
        upper=np.array([1.0, 1.0]),
        slack=0.0,
    )
    violations = check_bounds(ensemble, table)
    assert len(violations) == 1
    v = violations[0]
    assert (v.k, v.realization, v.kind) == (1, 0, "upper")
    assert v.value == 2.0 and v.bound == 1.0


def test_wishart_marchenko_pastur_oracle():
    # identity correlations: composite eigenvalues times n recover the
    # spectrum of H H^H / n, whose extremes approach the (0, 4) edges
    n, realizations = 256, 50
    flat = np.full(n, 1.0 / n)
    tops, bottoms = [], []
    for i in range(realizations):
        hw = sample_hw(n, n, realization_stream(123, i))
        eigs = composite_eigs(flat, flat, hw) * n
        tops.append(eigs[0])
        bottoms.append(eigs[-1])
    assert np.mean(tops) == pytest.approx(4.0, rel=0.10)
    assert np.mean(bottoms) == pytest.approx(0.0, abs=0.01)


def test_tall_limit_recovers_transmit_spectrum():
    # eta -> 0: eigenvalues of H Dt H^H / n_r converge to Dt pointwise
    rng = np.random.default_rng(5)
    n_t, n_r = 4, 400
    dt = np.sort(rng.uniform(0.5, 1.5, n_t))[::-1]
    dt /= dt.sum()
    dr_flat = np.full(n_r, 1.0 / n_r)
    # with dr flat at 1/n_r the composite equals H Dt H^H / n_r directly
    means = np.zeros(n_t)
    reps = 30
    for i in range(reps):
        hw = sample_hw(n_r, n_t, realization_stream(31, i))
        eigs = composite_eigs(dt, dr_flat, hw)
        means += eigs[:n_t] / reps
    assert np.all(np.abs(means - dt) / dt < 0.10)


def test_wide_limit_scales_transmit_spectrum():
    # eta >= 100 with flat transmit spectrum: eigenvalues approach eta * dt_k
    n_t, n_r = 400, 4
    dt = np.full(n_t, 1.0 / n_t)
    dr_flat = np.full(n_r, 1.0 / n_r)
    eta = n_t / n_r
    ratios = []
    for i in range(30):
        hw = sample_hw(n_r, n_t, realization_stream(33, i))
        eigs = composite_eigs(dt, dr_flat, hw)
        ratios.extend(eigs / (eta * dt[0]))
    assert 0.9 <= np.mean(ratios) <= 1.1
