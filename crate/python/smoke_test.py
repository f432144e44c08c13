"""Smoke test for the kdense extension module.

    pip install --no-build-isolation ./crates/py
    python python/smoke_test.py
"""

import math

import kdense


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    disk = kdense.Body.ball(1.0)
    ellipse = kdense.Body.ellipsoid([2.0, 1.0])
    ball3 = kdense.Body.ball(1.0, dim=3)

    close(ellipse.support([1.0, 0.0]), 2.0, 1e-12)
    close(ellipse.support([0.0, 1.0]), 1.0, 1e-12)
    p = ellipse.boundary_point([1.0, 0.0])
    close(p[0], 2.0, 1e-9)
    close(ellipse.gauge(p), 1.0, 1e-9)
    # Curvature of x²/4 + y² = 1 at (2, 0) is a/b² = 2.
    close(ellipse.curvature([1.0, 0.0])["kappa"], 2.0, 1e-5)
    close(ball3.curvature([0.0, 0.0, 1.0])["kappa"], 1.0, 1e-5)

    area, err = ellipse.volume(points=1 << 15)
    close(area, 2.0 * math.pi, 5 * err + 1e-3)

    # Two unit disks at distance 1: 2π/3 − √3/2.
    lens, err = kdense.intersection_volume(disk, disk, [1.0, 0.0], 1.0, points=1 << 15)
    close(lens, 2 * math.pi / 3 - math.sqrt(3) / 2, 5 * err + 1e-3)

    k = disk.difference_body()
    close(k.support([0.6, 0.8]), 2.0, 1e-12)
    s = (disk + disk).support([1.0, 0.0])
    close(s, 2.0, 1e-12)
    close((-disk.translate([0.5, 0.0])).support([1.0, 0.0]), 0.5, 1e-12)

    closed = kdense.large_r_closed(disk, kdense.Body.ball(2.0), [-1.0, 0.0])
    close(closed["theorem"], 16.0 / 3.0, 1e-6)
    close(closed["hessian_normalized"], 16.0 * math.sqrt(2) / 3.0, 1e-6)
    fit = kdense.large_r_fit(disk, kdense.Body.ball(2.0), [-1.0, 0.0])
    close(fit["exponent"], 1.5, 0.05)

    petty = kdense.petty_check(ellipse, 64)
    assert petty["constant"], petty
    close(petty["mean"], 0.25, 1e-6)
    assert not kdense.petty_check(kdense.Body.superellipse(4.0), 64)["constant"]

    ok, _ = kdense.k_equals_2g(ellipse)
    assert ok
    assert kdense.kp1_check(ellipse, [0.6, 0.8]) < 1e-6
    kp = kdense.krantz_parks_residuals(ellipse, disk, [0.6, 0.8])
    assert kp["stated"] < 1e-6, kp

    reuleaux = kdense.Body.reuleaux(1.0)
    assert not reuleaux.is_smooth()
    try:
        kdense.touch_point(reuleaux, reuleaux.difference_body(), [0.0, 1.0 / math.sqrt(3)])
    except kdense.KdenseError as e:
        assert e.args[0] == "non_unique_contact", e.args
    else:
        raise AssertionError("expected a non-unique contact")

    spread = kdense.kdense_spread(ellipse, ellipse.difference_body(), 0.5, m=16, points=1 << 14)
    assert spread["relative_spread"] >= 0.0
    print("smoke test passed")


if __name__ == "__main__":
    main()
