import math

import numpy as np
import pytest

from metastab.errors import InputDataError
from metastab.examples import chain_sampled, double_well
from metastab.landscape import extract_critical_structure, make_sampled
from metastab.spectra import full_spectrum
from metastab.topology import decompose
from metastab.validator import (compare, default_grid, discretize,
                                small_eigenvalues, sturm_count)


def _report(p):
    cs = extract_critical_structure(p)
    cd = decompose(cs)
    return full_spectrum(cs, cd)


# ---------------------------------------------------------------- discretize


def test_quadratic_well_spectrum():
    # phi = x^2 gives |phi'|^2 - h phi'' = 4x^2 - 2h, a shifted oscillator
    # with exact eigenvalues 4hk
    dw = discretize(lambda x: x * x, 1.0, n=4000, domain=(-6.0, 6.0))
    w = small_eigenvalues(dw, 3)
    assert w[0] <= 1e-12
    assert abs(w[1] - 4.0) <= 1e-8
    assert abs(w[2] - 8.0) <= 1e-7


def test_gibbs_vector_near_kernel():
    # interior rows of the factor kill e^(-phi/h) up to rounding, so its
    # Rayleigh quotient sits at the boundary-truncation floor
    dw = discretize(lambda x: x * x, 1.0, n=4000, domain=(-6.0, 6.0))
    v = np.exp(-dw.phi / dw.h)
    r = np.zeros(dw.n + 1)
    r[:dw.n] += dw.acoef * v
    r[1:] += dw.bcoef[1:] * v
    assert (r @ r) / (v @ v) <= 1e-20


def test_default_energy_window():
    # the solve domain stops once the potential clears the top saddle, well
    # inside the sampled range
    p = double_well().potential
    dw = discretize(p, 0.1)
    assert dw.n == 4000
    assert -1.6 < dw.x[0] < -1.5 and 1.5 < dw.x[-1] < 1.6


def test_grid_refinement_is_converged():
    p = double_well().potential
    w1 = small_eigenvalues(discretize(p, 0.1), 2)
    w2 = small_eigenvalues(discretize(p, 0.1, n=8000), 2)
    assert abs(w1[1] - w2[1]) / w2[1] <= 1e-8


def test_discretize_errors():
    p = double_well().potential
    with pytest.raises(InputDataError, match="h must be positive"):
        discretize(p, 0.0)
    with pytest.raises(InputDataError, match="cover all minima"):
        discretize(p, 0.1, domain=(0.0, 2.0))
    with pytest.raises(InputDataError, match="beyond the sampled data"):
        discretize(p, 0.1, domain=(-3.0, 3.0))
    with pytest.raises(InputDataError, match="needs an explicit domain"):
        discretize(lambda x: x * x, 0.1)
    with pytest.raises(InputDataError, match="sampled data or a callable"):
        discretize([1, 2, 3], 0.1)
    with pytest.raises(InputDataError, match="empty domain"):
        discretize(lambda x: x * x, 0.1, domain=(1.0, 1.0))
    with pytest.raises(InputDataError, match="at least 100"):
        discretize(lambda x: x * x, 0.1, n=50, domain=(-1.0, 1.0))


def test_spread_guard():
    with pytest.raises(InputDataError, match="underflow double precision"):
        discretize(lambda x: 100.0 * x * x, 0.1, n=4000, domain=(-10.0, 10.0))


def test_per_cell_exponent_guard():
    # the range (28) passes the spread guard at h=0.1, but a 100-point grid
    # cannot resolve 50 oscillations
    with pytest.raises(InputDataError, match="increase the grid"):
        discretize(lambda x: 14.0 * np.cos(100.0 * np.pi * x), 0.1,
                   n=100, domain=(0.0, 1.0))


def test_small_eigenvalues_bounds():
    dw = discretize(lambda x: x * x, 1.0, n=200, domain=(-6.0, 6.0))
    with pytest.raises(InputDataError, match="exceeds dimension"):
        small_eigenvalues(dw, 201)
    with pytest.raises(InputDataError, match="exceeds dimension"):
        small_eigenvalues(dw, 0)


# -------------------------------------------------------------- double well


def test_double_well_eigenvalue_near_prediction():
    p = double_well().potential
    dw = discretize(p, 0.1)
    w = small_eigenvalues(dw, 2)
    assert w[0] <= 1e-15
    pred = (8.0 * math.sqrt(2.0) / math.pi) * 0.1 * math.exp(-2.0 / 0.1)
    assert abs(w[1] / pred - 1.0) <= 0.05


def test_double_well_sturm_count():
    # counts on the assembled tridiagonal are good down to roughly
    # eps * ||A||, enough to separate the metastable cluster from the gap
    dw = discretize(double_well().potential, 0.1)
    assert sturm_count(dw, 0.05) == 2
    assert sturm_count(dw, 1e-6) == 2
    assert sturm_count(dw, 1.0) == 3


# -------------------------------------------------------------------- chain


def test_chain_small_cluster_and_gap():
    p = chain_sampled()
    dw = discretize(p, 0.08)
    w = small_eigenvalues(dw, 5)
    # four metastable states, then an O(1) spectral gap
    assert w[0] <= 1e-25
    assert w[4] / w[3] > 1e4
    assert sturm_count(dw, math.sqrt(w[3] * w[4])) == 4


def test_chain_compare_passes():
    p = chain_sampled()
    report = _report(p)
    assert report.n0 == 4
    vr = compare(report, p, (0.10, 0.08))
    assert vr.verdicts == ("PASS", "PASS", "PASS")
    assert vr.passed
    hs = [s.h for s in vr.steps]
    assert hs == [0.10, 0.08]
    for i in range(3):
        devs = [s.deviations[i] for s in vr.steps]
        assert devs[1] <= devs[0] <= 0.15
        assert all(s.richardson[i] <= 1e-6 for s in vr.steps)


def test_compare_single_well_is_vacuous():
    xs = np.linspace(-2.0, 2.0, 2001)
    p = make_sampled(xs, xs ** 2)
    report = _report(p)
    vr = compare(report, p, (0.1,))
    assert vr.verdicts == ()
    assert vr.passed
    assert vr.n0 == 1


def test_compare_rejects_empty_schedule():
    p = double_well().potential
    report = _report(p)
    with pytest.raises(InputDataError, match="positive h"):
        compare(report, p, ())


def test_compare_detects_wrong_prefactor():
    # doctor the prediction by an O(1) factor: deviations stop shrinking and
    # the final value exceeds the tolerance
    p = double_well().potential
    report = _report(p)

    class Doctored:
        n0 = report.n0

        def evaluate(self, h):
            entries = report.evaluate(h)
            return [entries[0]] + [
                e._replace(lam=3.0 * e.lam, log_lam=e.log_lam + math.log(3.0))
                for e in entries[1:]
            ]

    vr = compare(Doctored(), p, (0.15, 0.10))
    assert vr.verdicts == ("FAIL",)
    assert not vr.passed


def test_default_grid_floor():
    assert default_grid(0.1, 0.0, 1.0) == 4000
    assert default_grid(0.0025, 0.0, 20.0) == 16000
