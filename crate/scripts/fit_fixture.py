"""Regenerate the 10x3 fit fixture and its expected intervals.

Uses the normal equations and adaptive scipy quadrature, independent of the
QR solve and Gauss-Legendre rules in the crate.

    python3 scripts/fit_fixture.py crates/core/tests/fixtures
"""
import sys
from pathlib import Path

import numpy as np
from scipy import integrate, stats

norm = stats.norm
phi, Phi = norm.pdf, norm.cdf

ALPHA = 0.05
PRETEST_SIZE = 0.1
SIGMA = 0.8
A = np.array([0.0, 1.0, 0.0])
B = np.array([0.0, 0.0, 1.0])


def dataset():
    rng = np.random.default_rng(7)
    x1 = np.round(rng.normal(size=10), 3)
    x2 = np.round(0.6 * x1 + 0.8 * rng.normal(size=10), 3)
    x = np.column_stack([np.ones(10), x1, x2])
    beta = np.array([0.5, 1.0, 0.3])
    y = np.round(x @ beta + SIGMA * rng.normal(size=10), 3)
    return x, y


def k(g, d):
    return phi(d + g) - phi(d - g) + g * (Phi(d - g) - Phi(-d - g))


def q(g, d):
    return Phi(d - g) - Phi(-d - g) - d * (phi(d + g) + phi(d - g))


def expect(f, g):
    val, _ = integrate.quad(lambda z: f(z) * phi(z - g), g - 14, g + 14,
                            epsabs=1e-14, epsrel=1e-13, limit=500, points=[g])
    return val


def r(g, rho, d):
    m = expect(lambda z: k(z, d), g)
    cross = expect(lambda z: k(z, d) * (z - g), g)
    var = expect(lambda z: (k(z, d) - m) ** 2, g)
    return np.sqrt(1 - 2 * rho**2 * cross + rho**2 * var)


def r_delta(g, rho, d):
    qq = q(g, d)
    return np.sqrt(1 - 2 * rho**2 * qq + rho**2 * qq**2)


def main(out):
    out = Path(out)
    x, y = dataset()
    xtx_inv = np.linalg.inv(x.T @ x)
    beta = np.linalg.solve(x.T @ x, x.T @ y)
    theta, tau = A @ beta, B @ beta
    v_theta, v_tau = A @ xtx_inv @ A, B @ xtx_inv @ B
    rho = (A @ xtx_inv @ B) / np.sqrt(v_theta * v_tau)
    gamma_hat = tau / (SIGMA * np.sqrt(v_tau))
    d = norm.ppf(1 - PRETEST_SIZE / 2)
    z = norm.ppf(1 - ALPHA / 2)
    scale = SIGMA * np.sqrt(v_theta)

    smoothed = theta - rho * scale * k(gamma_hat, d)
    accepts = abs(gamma_hat) <= d
    pms = theta - rho * scale * gamma_hat if accepts else theta
    pms_half = z * scale * (np.sqrt(1 - rho**2) if accepts else 1.0)
    rows = [
        ("sd", smoothed, z * scale * r(gamma_hat, rho, d)),
        ("sd_delta", smoothed, z * scale * r_delta(gamma_hat, rho, d)),
        ("pms", pms, pms_half),
        ("full_model", theta, z * scale),
    ]

    np.savetxt(out / "design.csv", x, delimiter=",", fmt="%.3f")
    np.savetxt(out / "response.csv", y, fmt="%.3f")
    with open(out / "expected_fit.csv", "w") as f:
        f.write("field,value\n")
        for name, v in [("theta_hat", theta), ("tau_hat", tau), ("gamma_hat", gamma_hat),
                        ("v_theta", v_theta), ("v_tau", v_tau), ("rho", rho)]:
            f.write(f"{name},{float(v)!r}\n")
        f.write("\nrule,lower,upper,center,half_width\n")
        for rule, c, h in rows:
            f.write(f"{rule},{float(c - h)!r},{float(c + h)!r},{float(c)!r},{float(h)!r}\n")
    print(open(out / "expected_fit.csv").read())


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
