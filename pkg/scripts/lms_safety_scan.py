"""Numerically determine the safety radius of an LMS time stepper.

The stability/accuracy analysis of the linear multistep root finder only
trusts approximate characteristic roots lambda with |lambda*h| <= rho, where
rho is the radius of the largest disk around the origin on which the
principal root mu_p(z) of

    sum_l (alpha_l - z*beta_l) mu^l = 0

stays within a relative tolerance eps of exp(z).  This script performs the
scan for the BDF4 scheme used as the default method and prints the radius
that is hard-coded in ddebif.spectrum.

Run:  python scripts/lms_safety_scan.py
"""

import numpy as np

# BDF4, coefficients ordered past -> present, oldest alpha scaled to 1.
ALPHA = np.array([1.0, -16.0 / 3.0, 12.0, -16.0, 25.0 / 3.0])
BETA = np.array([0.0, 0.0, 0.0, 0.0, 4.0])


def principal_root_error(z: complex) -> float:
    """Relative distance of the root closest to exp(z) from exp(z)."""
    coeffs = ALPHA - z * BETA
    roots = np.roots(coeffs[::-1])
    target = np.exp(z)
    return float(np.min(np.abs(roots - target)) / abs(target))


def max_error_on_circle(radius: float, n_angles: int = 720) -> float:
    angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    return max(principal_root_error(radius * np.exp(1j * t)) for t in angles)


def safety_radius(eps: float = 0.01, hi: float = 6.0) -> float:
    lo = 1e-2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if max_error_on_circle(mid) <= eps:
            lo = mid
        else:
            hi = mid
    return lo


if __name__ == "__main__":
    rho = safety_radius()
    print(f"BDF4 safety radius (eps=0.01): {rho:.12f}")
