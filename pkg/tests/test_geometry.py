import math

import numpy as np
import pytest

from diffwos.errors import (
    ConfigError,
    DomainError,
    SingularityError,
    StaleQueryError,
    UnsupportedBoundaryError,
)
from diffwos.geometry import (
    BezierChain,
    ImplicitMonopoles,
    PolylineBoundary,
    SphereBoundary,
    SpherePrimitive,
    distance_to_boundary,
    implicit_step,
)


# -- spheres -----------------------------------------------------------

def disk(cx=0.0, cy=0.0, r=1.0, **kw):
    return SphereBoundary([SpherePrimitive((cx, cy), r, **kw)])


def test_sphere_closest_point_and_normal():
    b = disk()
    q = b.closest_point((0.5, 0.0))
    assert q.closest == pytest.approx((1.0, 0.0))
    assert q.normal == pytest.approx((1.0, 0.0))
    assert q.distance == pytest.approx(0.5)


def test_hole_normal_points_into_hole():
    outer = SpherePrimitive((0, 0), 2.0, frozen_center=True, frozen_radius=True)
    inner = SpherePrimitive((0, 0), 1.0, hole=True)
    b = SphereBoundary([outer, inner])
    q = b.closest_point((1.2, 0.0))
    assert q.normal == pytest.approx((-1.0, 0.0))  # outward = toward the hole
    assert b.contains((1.5, 0.0))
    assert not b.contains((0.5, 0.0))
    assert not b.contains((2.5, 0.0))


def test_sphere_normal_velocity_roles():
    b = disk()
    q = b.closest_point((0.5, 0.0))
    v = b.normal_velocity(q)
    # params: cx, cy, R; at the +x pole: v_n = (1, 0, 1)
    assert v[0] == pytest.approx(1.0)
    assert v.get(1, 0.0) == pytest.approx(0.0)
    assert v[2] == pytest.approx(1.0)


def test_hole_radius_velocity_sign():
    outer = SpherePrimitive((0, 0), 2.0, frozen_center=True, frozen_radius=True)
    inner = SpherePrimitive((0, 0), 1.0, hole=True, frozen_center=True)
    b = SphereBoundary([outer, inner])
    q = b.closest_point((1.2, 0.0))
    # growing the hole moves the boundary against the outward normal
    assert b.normal_velocity(q)[0] == pytest.approx(-1.0)


def test_stale_query_rejected():
    b = disk()
    q = b.closest_point((0.5, 0.0))
    b.set_params([0.1, 0.0, 1.0])
    with pytest.raises(StaleQueryError):
        b.normal_velocity(q)


def test_distance_to_boundary_outside_raises():
    with pytest.raises(DomainError):
        distance_to_boundary((3.0, 0.0), disk())


# -- polyline ----------------------------------------------------------

def square(side=2.0, **kw):
    h = side / 2
    return PolylineBoundary([(-h, -h), (h, -h), (h, h), (-h, h)], **kw)


def test_polyline_contains_and_closest():
    b = square()
    assert b.contains((0.0, 0.0))
    assert not b.contains((2.0, 2.0))
    q = b.closest_point((0.9, 0.0))
    assert q.closest == pytest.approx((1.0, 0.0))
    assert q.normal == pytest.approx((1.0, 0.0))


def test_polyline_auto_orientation():
    # clockwise input is flipped so outward normals still point out
    b = PolylineBoundary([(-1, -1), (-1, 1), (1, 1), (1, -1)])
    q = b.closest_point((0.9, 0.0))
    assert q.normal == pytest.approx((1.0, 0.0))


def test_polyline_hole_orientation():
    outer = [(-2, -2), (2, -2), (2, 2), (-2, 2)]
    hole = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    b = PolylineBoundary(outer + hole, loops=[[0, 1, 2, 3], [4, 5, 6, 7]])
    assert b.contains((1.5, 0.0))
    assert not b.contains((0.0, 0.0))
    q = b.closest_point((1.1, 0.0))
    assert q.normal[0] == pytest.approx(-1.0)


def test_polyline_hat_velocity_weights():
    b = square()
    q = b.closest_point((0.9, 0.0))  # midpoint of edge (1,-1)-(1,1)
    v = b.normal_velocity(q)
    # x components of both edge endpoints get weight 1/2
    slots = {k: w for k, w in v.items()}
    assert sum(slots.values()) == pytest.approx(1.0)
    assert all(w == pytest.approx(0.5) for w in slots.values())


def test_polyline_normal_velocity_matches_fd():
    b = PolylineBoundary.regular_polygon((0, 0), 1.0, 12)
    x = (0.2, 0.35)
    q = b.closest_point(x)
    v = b.normal_velocity(q)
    params = np.array(b.get_params())
    h = 1e-6
    for k, vn in v.items():
        bumped = params.copy()
        bumped[k] += h
        b2 = PolylineBoundary.regular_polygon((0, 0), 1.0, 12)
        b2.set_params(bumped)
        d0 = b.closest_point(x).distance
        d1 = b2.closest_point(x).distance
        # boundary moving out along the normal increases the distance
        assert (d1 - d0) / h == pytest.approx(vn, abs=1e-4)


def test_polyline_resample_and_frozen():
    b = PolylineBoundary.regular_polygon((0, 0), 1.0, 16)
    per = b.perimeter()
    b.resample_uniform(per / 32)
    assert len(b.vertices) >= 28
    assert b.perimeter() == pytest.approx(per, rel=0.05)
    fb = PolylineBoundary.regular_polygon((0, 0), 1.0, 16, frozen=True)
    assert fb.n_params == 0
    with pytest.raises(ConfigError):
        fb.resample_uniform(per / 32)


def test_polyline_degenerate_rejected():
    with pytest.raises(ConfigError):
        PolylineBoundary([(0, 0), (0, 0), (1, 1)])


def test_polyline_curvature_sign():
    b = PolylineBoundary.regular_polygon((0, 0), 1.0, 64)
    q = b.closest_point((0.9, 0.0))
    assert b.curvature(q) == pytest.approx(1.0, rel=0.05)


def test_polyline_sample_boundary_uniform():
    b = square()
    gen = np.random.default_rng(0)
    pts = np.array([b.sample_boundary(gen)[0] for _ in range(2000)])
    # each side carries 1/4 of the samples
    frac_right = (pts[:, 0] > 0.999).mean()
    assert frac_right == pytest.approx(0.25, abs=0.04)
    _, _, pdf = b.sample_boundary(gen)
    assert pdf == pytest.approx(1.0 / b.perimeter())


# -- bezier ------------------------------------------------------------

def test_bezier_circle_geometry():
    b = BezierChain.circle((0.0, 0.0), 1.0, n_segments=8)
    assert b.perimeter() == pytest.approx(2 * math.pi, rel=1e-3)
    q = b.closest_point((0.5, 0.0))
    assert q.distance == pytest.approx(0.5, abs=1e-3)
    assert q.normal == pytest.approx((1.0, 0.0), abs=1e-2)
    assert b.contains((0.0, 0.0))
    assert not b.contains((1.5, 0.0))
    assert b.curvature(q) == pytest.approx(1.0, rel=2e-2)


def test_bezier_velocity_matches_fd():
    b = BezierChain.circle((0.0, 0.0), 1.0, n_segments=4)
    x = (0.3, 0.2)
    q = b.closest_point(x)
    v = b.normal_velocity(q)
    assert v, "interior point should see some moving parameter"
    params = np.array(b.get_params())
    h = 1e-6
    for k, vn in list(v.items())[:4]:
        b2 = BezierChain.circle((0.0, 0.0), 1.0, n_segments=4)
        bumped = params.copy()
        bumped[k] += h
        b2.set_params(bumped)
        d0 = b.closest_point(x).distance
        d1 = b2.closest_point(x).distance
        assert (d1 - d0) / h == pytest.approx(vn, abs=5e-3)


def test_bezier_colinearity_repair():
    b = BezierChain.circle((0.0, 0.0), 1.0, n_segments=4)
    params = np.array(b.get_params())
    gen = np.random.default_rng(3)
    b.set_params(params + gen.normal(scale=1e-2, size=len(params)))
    b.repair_colinearity()
    m = len(b.anchors)
    for i in range(m):
        hin = np.asarray(b.handles_in[i]) - b.anchors[i]
        hout = np.asarray(b.handles_out[i]) - b.anchors[i]
        cross = hin[0] * hout[1] - hin[1] * hout[0]
        assert abs(cross) < 1e-9  # handles kept colinear through the anchor


# -- implicit monopoles --------------------------------------------------

def one_pole(scale=1.0, offset=-1.0):
    return ImplicitMonopoles(offset, [scale], [(0.0, 0.0)])


def test_implicit_level_set_is_circle():
    # h = -1 + a/r > 0 <=> r < a
    b = one_pole(scale=0.8)
    assert b.contains((0.5, 0.0))
    assert not b.contains((0.9, 0.0))
    assert b.level_distance((0.79999, 0.0)) < 1e-3


def test_implicit_harnack_step_stays_in_domain():
    b = ImplicitMonopoles(-1.0, [0.8, 0.5], [(-0.5, 0.0), (0.7, 0.1)])
    gen = np.random.default_rng(0)
    for _ in range(200):
        x = tuple(gen.uniform(-1.5, 1.5, size=2))
        if not b.contains(x):
            continue
        R = b.empty_radius(x)
        assert R > 0.0
        for ang in np.linspace(0, 2 * math.pi, 16, endpoint=False):
            y = (x[0] + 0.999 * R * math.cos(ang), x[1] + 0.999 * R * math.sin(ang))
            assert b.h(y) > 0.0, f"sign change inside step radius at {y}"


def test_implicit_step_terminates_near_level_set():
    b = one_pole(scale=0.8)
    radius, terminated, closest = implicit_step((0.7999, 0.0), b, 1e-3)
    assert terminated
    assert math.hypot(*closest) == pytest.approx(0.8, abs=5e-3)


def test_implicit_pole_exclusion():
    b = one_pole()
    with pytest.raises(SingularityError):
        b.h((0.0, 0.0))


def test_implicit_normal_velocity_analytic():
    # disk radius r0 = a at c=-1; dr0/da = 1, so v_n = 1 for the scale param
    b = one_pole(scale=0.8)
    q = b.closest_point((0.75, 0.0))
    v = b.normal_velocity(q)
    # layout: scale a then pole position (offset frozen by default? check roles)
    k_scale = b.param_roles().index("pole0.scale")
    assert v[k_scale] == pytest.approx(1.0, abs=1e-6)


def test_implicit_unsupported_ops():
    b = one_pole()
    gen = np.random.default_rng(0)
    with pytest.raises(UnsupportedBoundaryError):
        b.sample_boundary(gen)
    with pytest.raises(UnsupportedBoundaryError):
        b.perimeter()


def test_revision_bumps_on_set_params():
    b = disk()
    r0 = b.revision
    b.set_params([0.0, 0.0, 1.1])
    assert b.revision != r0
