import numpy as np
import pytest

from trimon.crossing import (CrossingDataset, crossing_branches, fit_avoided_crossing, infer_branches,
                             synthetic_dataset, transmon_frequency)
from trimon.errors import FitError, InvalidInputError

FLUX = np.linspace(0.1, 0.3, 41)
TRUE = dict(J=38.8e6, omega_q=5.5585e9, omega_max=6.2e9, scale=1.0)


def test_branch_gap_at_degeneracy():
    wq, wmax = TRUE["omega_q"], TRUE["omega_max"]
    flux0 = np.arccos((wq / wmax) ** 2) / np.pi
    assert transmon_frequency(flux0, wmax, 1.0) == pytest.approx(wq)
    up, down = crossing_branches(flux0, TRUE["J"], wq, wmax, 1.0)
    assert up - down == pytest.approx(2 * TRUE["J"])


def test_noiseless_fit_is_exact():
    fit = fit_avoided_crossing(synthetic_dataset(flux=FLUX, **TRUE))
    assert fit.j_over_pi == pytest.approx(77.6e6, rel=1e-6)
    assert fit.omega_q == pytest.approx(TRUE["omega_q"], rel=1e-9)
    assert fit.residual_rms < 1e3
    assert fit.degeneracy_flux == pytest.approx(np.arccos((5.5585 / 6.2) ** 2) / np.pi, rel=1e-6)


def test_noisy_fit_within_a_few_percent():
    data = synthetic_dataset(flux=FLUX, noise=0.5e6, rng=np.random.default_rng(6), **TRUE)
    fit = fit_avoided_crossing(data)
    assert fit.j_over_pi == pytest.approx(77.6e6, rel=0.02)
    assert fit.residual_rms == pytest.approx(0.5e6, rel=0.3)


def test_unlabeled_points():
    data = synthetic_dataset(flux=FLUX, labeled=False, **TRUE)
    assert np.array_equal(infer_branches(data), np.repeat([1, -1], len(FLUX)))
    assert fit_avoided_crossing(data).j_over_pi == pytest.approx(77.6e6, rel=1e-5)


def test_zero_coupling():
    fit = fit_avoided_crossing(synthetic_dataset(0.0, 5.5585e9, 6.2e9, 1.0, FLUX))
    assert fit.J < 0.5e6


def test_too_few_points_or_single_branch():
    data = synthetic_dataset(flux=FLUX[:2], **TRUE)
    with pytest.raises(FitError):
        fit_avoided_crossing(data)
    full = synthetic_dataset(flux=FLUX, **TRUE)
    upper = CrossingDataset(full.flux[full.branch > 0], full.freq[full.branch > 0], full.branch[full.branch > 0])
    with pytest.raises(FitError):
        fit_avoided_crossing(upper)


def test_dataset_validation():
    with pytest.raises(InvalidInputError):
        CrossingDataset(np.zeros(3), np.zeros(4), np.zeros(3))
    with pytest.raises(InvalidInputError):
        CrossingDataset(np.zeros(3), np.zeros(3), np.array([0, 2, 1]))
