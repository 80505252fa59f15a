"""Sanity checks on the reference routines themselves."""
import numpy as np
import pytest

from laserstats.model import LaserParams, event_table
from laserstats.oracles import LinearNoise, master_equation, steady_by_root, thermal_cap


def test_thermal_cap():
    cap = thermal_cap(2.0)
    q = 2.0 / 3.0
    assert q**cap <= 1e-9 < q ** (cap - 1)


def test_master_equation_stationary_flux_balance():
    # in stationarity the mean photon gain rate equals the mean loss rate
    p = LaserParams("V3", 3, P=2.0, ell=1, p_u=4.0, gamma=0.7, alpha=0.5)
    sol = master_equation(p, 60)
    assert sol.probabilities.sum() == pytest.approx(1.0)
    events = event_table(p)
    gain = loss = 0.0
    for (n, m), w in zip(sol.states, sol.probabilities):
        for e in events:
            from laserstats.model import MicroState

            r = e.rate(MicroState(n, m))
            if e.dm > 0:
                gain += w * r
            elif e.dm < 0:
                loss += w * r
    assert gain == pytest.approx(loss, rel=1e-9)
    dist = sol.photon_distribution()
    assert dist[-5:].sum() < 1e-9


def test_root_steady_balances_photon_flux():
    p = LaserParams("Lambda3", 500, P=20.0, ell=0, p_d=100.0, gamma=2.0, alpha=1.5)
    ref = steady_by_root(p)
    n, m = ref.populations, ref.m
    assert (m + 1) * n[2] - m * n[1] == pytest.approx(p.alpha * m, rel=1e-12)
    assert n.sum() == pytest.approx(p.N)


def test_lyapunov_covariance_solves_its_equation():
    p = LaserParams("Four4", 1000, P=50.0, ell=1, p_u=200.0, p_d=300.0, gamma=5.0, alpha=2.0)
    ln = LinearNoise(p)
    C = ln.covariance()
    np.testing.assert_allclose(ln.A @ C + C @ ln.A.T + ln.D, 0.0, atol=1e-8 * np.abs(ln.D).max())
    assert np.all(np.linalg.eigvalsh(0.5 * (C + C.T)) > 0)
