"""Smoke tests for the python module: topology, LP, solve, spectrum."""

import math

import numpy as np
import pytest

import cglab

CAP = [
    complex(0.013, -0.021),
    complex(0.3407, 0.0037),
    complex(0.2132, 0.2597),
    complex(-0.0802, 0.3327),
    complex(-0.3042, 0.1380),
    complex(-0.3098, -0.1452),
    complex(-0.0703, -0.3241),
    complex(0.2047, -0.2655),
]


def cube_points():
    m1 = (7 - 4 * math.sqrt(3)) ** 0.25
    m2 = (7 + 4 * math.sqrt(3)) ** 0.25
    pts = []
    for m in (m1, m2):
        for k in range(4):
            ang = math.pi / 4 + k * math.pi / 2
            pts.append(complex(m * math.cos(ang), m * math.sin(ang)))
    return pts


def test_chart_round_trip():
    x, y, z = cglab.stereo_to_sphere(0.3 + 0.4j)
    assert abs(x * x + y * y + z * z - 1) < 1e-12
    back = cglab.sphere_to_stereo(x, y, z)
    assert abs(back - (0.3 + 0.4j)) < 1e-12
    assert cglab.sphere_to_stereo(-1.0, 0.0, 0.0) is None


def test_mesh_topology():
    mesh = cglab.build_mesh(CAP, level=1)
    assert mesh["euler_characteristic"] == -4
    assert mesh["genus"] == 3
    assert mesh["ramification_count"] == 8
    assert mesh["vertices"].shape[1] == 3
    # w vanishes exactly at the ramification vertices and nowhere else
    w = mesh["w"]
    ram = mesh["is_ramification"]
    assert np.all(np.abs(w[ram]) == 0)
    assert np.all(np.abs(w[~ram]) > 0)
    # vertices are unit
    assert np.allclose(np.linalg.norm(mesh["vertices"], axis=1), 1.0, atol=1e-12)
    # cyclic cover doubles chi
    cover = cglab.build_mesh(CAP, level=1, cover=2)
    assert cover["euler_characteristic"] == -8
    assert cover["genus"] == 5


def test_hemisphere_margin():
    rep = cglab.hemisphere_margin(np.array([cglab.stereo_to_sphere(p) for p in CAP]))
    assert rep["feasible"] and rep["margin"] > 0.7

    cube = np.array([cglab.stereo_to_sphere(p) for p in cube_points()])
    rep = cglab.hemisphere_margin(cube)
    assert not rep["feasible"]
    assert abs(rep["margin"] + 1 / math.sqrt(3)) < 1e-9

    mob = cglab.hemispherizing_mobius(cube)
    assert mob is not None


def test_solve_and_failure():
    sol = cglab.solve(CAP, alpha_prime=1.0, level=1)
    assert sol["residuals"]["quadratic_max"] <= 1e-12
    assert sol["residuals"]["pde_pointwise_max"] <= 1e-9
    assert sol["residuals"]["min_u_at_ramification"] > 0
    assert np.all(np.isfinite(sol["f"]))

    with pytest.raises(cglab.NoAdmissibleUError):
        cglab.solve(cube_points(), level=1)

    with pytest.raises(cglab.ValidationError):
        cglab.solve(CAP[:7], level=1)


def test_spectrum():
    rep = cglab.spectrum(CAP, level=2)
    assert rep["kernel_multiplicity"] >= 3
    assert 2 <= rep["index"] <= 15
    assert abs(rep["total_mass"] - 8 * math.pi) < 1e-9
    assert rep["kernel_projection_residual"] <= 0.05


def test_identities_and_periods():
    worst = max(cglab.verify_identities(CAP, level=1, samples=10).values())
    assert worst <= 1e-9
    per = cglab.periods(CAP, level=2)
    assert per.shape == (6, 3)
    assert np.all(np.isfinite(per.view(float)))
