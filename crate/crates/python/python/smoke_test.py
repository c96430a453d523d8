"""Smoke test for the pygaussrd extension module.

Build and install with `maturin develop --release` (or `pip install .`) from
crates/python, then run `python python/smoke_test.py`.
"""

import math

import pygaussrd as g


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    tc = g.TwoTypeCorrelation(3, 0.2, 0.3)
    e = [0.5, 0.5, 0.3]
    close(tc.determinant(), 0.816, 1e-12)
    assert len(tc.matrix()) == 3
    assert g.sdc_2tc(tc, e).satisfied
    assert g.sdc_eigen(tc.matrix(), e).satisfied
    close(g.nats_to_bits(g.rdf_2tc_closed(tc, e)), 1.7218, 5e-5)
    close(g.nats_to_bits(g.hadamard_rate(tc.matrix(), e)), 1.7218, 5e-5)

    k = [[1.0, 0.8], [0.8, 1.0]]
    sol = g.solve_rdf(k, [0.5, 0.5])
    assert not sol.sdc_satisfied
    assert sol.recon_rank == 1
    close(sol.rate_bits, math.log2(1.5), 1e-6)
    assert sol.kkt_residual < 1e-6
    close(g.nats_to_bits(g.brute_force_rdf(k, [0.5, 0.5], 0.05)), sol.rate_bits, 1e-4)

    try:
        g.solve_rdf(k, [0.5, 0.5], max_newton=1)
    except RuntimeError:
        pass
    else:
        raise AssertionError("expected RuntimeError")
    try:
        g.TwoTypeCorrelation(3, 0.2, 0.9)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    r = g.rho0_max([0.5, 0.1, 0.05, 0.02])
    assert r.lower_concise <= r.lower_sharp <= r.rho0_m <= r.upper_concise
    assert g.rho1_max([0.5, 0.1, 0.05, 0.02], 0.5 * r.rho0_m) > 0.0
    assert len(g.region_boundary([0.5, 0.1, 0.05, 0.02], 16)) == 16

    p = g.sdc_probability(2, 0.0, 0.45, 20000, seed=3, method="plain")
    close(p.p_hat, 1 - 0.45**2 * (1 - math.log(0.45**2)), 4 * p.ci95_half_width)
    p4 = g.sdc_probability(4, 0.3, 0.45, 20000, seed=3, method="plain")
    c4 = g.sdc_probability(4, 0.3, 0.45, 5000, seed=3, method="cmc")
    close(c4.p_hat, p4.p_hat, 4 * (p4.ci95_half_width + c4.ci95_half_width))
    slope, _ = g.decay_rate_fit([(n, 0.5 * 0.7**n) for n in range(3, 10)])
    close(slope, math.log(0.7), 1e-9)

    dist, cov = g.test_channel_sim(k, sol.d_star, 20000, seed=5)
    for i in range(2):
        close(dist[i][i], sol.d_star[i][i], 0.05)
        close(cov[i][i], 1.0, 0.05)

    print("pygaussrd smoke test passed")


if __name__ == "__main__":
    main()
