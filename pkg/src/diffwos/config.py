"""JSON scene configuration: parsing, validation, and serialization.

A config document has sections geometry, bvp, functional, solver,
optimizer, and output. Unknown keys are rejected everywhere. Lengths
(epsilon, offset) are relative to the scene bounding box; file paths are
resolved against the config file's directory.

Round-trip guarantee: parse -> serialize -> parse builds an identical
scene, because serialization emits the normalized document.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .data import ConstantData, MappedData, RestrictedData
from .errors import ConfigError
from .fields import GridLookupField, ZeroField, make_field
from .functional import FunctionalSpec, ProductEstimatorConfig, make_mask
from .geometry.bezier import BezierChain
from .geometry.implicit import ImplicitMonopoles
from .geometry.polyline import PolylineBoundary
from .geometry.spheres import SphereBoundary, SpherePrimitive
from .gridfield import read_gridfield
from .optimizer import OptimizerConfig
from .scene import Scene
from .solver import BVPSpec, SolverConfig


def _check_keys(section: dict, allowed, where: str):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _build_geometry(sec: dict):
    kind = sec.get("kind")
    if kind == "polyline":
        _check_keys(sec, {"kind", "vertices", "loops", "frozen"}, "geometry")
        return PolylineBoundary(sec["vertices"], sec.get("loops"),
                                sec.get("frozen"))
    if kind == "polygon":
        _check_keys(sec, {"kind", "center", "radius", "n", "frozen"}, "geometry")
        return PolylineBoundary.regular_polygon(
            tuple(sec.get("center", (0.0, 0.0))), float(sec["radius"]),
            int(sec.get("n", 64)), frozen=bool(sec.get("frozen", False)))
    if kind == "bezier":
        _check_keys(sec, {"kind", "anchors", "handles_out", "handles_in",
                          "colinear"}, "geometry")
        return BezierChain(sec["anchors"], sec["handles_out"],
                           sec["handles_in"], sec.get("colinear"))
    if kind == "bezier_circle":
        _check_keys(sec, {"kind", "center", "radius", "segments"}, "geometry")
        return BezierChain.circle(tuple(sec.get("center", (0.0, 0.0))),
                                  float(sec["radius"]),
                                  int(sec.get("segments", 8)))
    if kind == "spheres":
        _check_keys(sec, {"kind", "primitives"}, "geometry")
        prims = []
        for p in sec["primitives"]:
            _check_keys(p, {"center", "radius", "hole", "frozen_center",
                            "frozen_radius"}, "geometry.primitives")
            prims.append(SpherePrimitive(
                tuple(p["center"]), float(p["radius"]),
                hole=bool(p.get("hole", False)),
                frozen_center=bool(p.get("frozen_center", False)),
                frozen_radius=bool(p.get("frozen_radius", False))))
        return SphereBoundary(prims)
    if kind == "monopoles":
        _check_keys(sec, {"kind", "offset", "scales", "poles", "bbox",
                          "frozen_offset", "frozen_scales", "frozen_poles"}, "geometry")
        bbox = None
        if "bbox" in sec:
            b = [float(v) for v in sec["bbox"]]
            if len(b) != 4:
                raise ConfigError("geometry.bbox must be [xmin, ymin, xmax, ymax]")
            bbox = ((b[0], b[1]), (b[2], b[3]))
        return ImplicitMonopoles(float(sec["offset"]), sec["scales"],
                                 sec["poles"], bbox=bbox,
                                 frozen_offset=bool(sec.get("frozen_offset", False)),
                                 frozen_scales=bool(sec.get("frozen_scales", False)),
                                 frozen_poles=bool(sec.get("frozen_poles", False)))
    raise ConfigError(f"unknown geometry kind {kind!r}")


def _build_dirichlet(sec: dict, base_dir):
    if sec is None:
        return ConstantData(0.0)
    if isinstance(sec, (int, float)):
        return ConstantData(float(sec))
    model = sec.get("model")
    if model == "constant":
        _check_keys(sec, {"model", "value"}, "bvp.dirichlet")
        return ConstantData(float(sec.get("value", 0.0)))
    if model == "restricted":
        _check_keys(sec, {"model", "field"}, "bvp.dirichlet")
        return RestrictedData(make_field(sec["field"], base_dir))
    if model == "mapped":
        _check_keys(sec, {"model", "values", "optimize"}, "bvp.dirichlet")
        return MappedData(sec["values"], optimize=bool(sec.get("optimize", False)))
    raise ConfigError(f"unknown dirichlet model {model!r}")


def _build_reference(spec, base_dir):
    if spec is None:
        return ZeroField()
    if isinstance(spec, str):
        path = spec if os.path.isabs(spec) else os.path.join(base_dir or ".", spec)
        return GridLookupField(read_gridfield(path))
    return make_field(spec, base_dir)


@dataclass
class RunConfig:
    scene: Scene
    bvp: BVPSpec
    functional: FunctionalSpec
    solver: SolverConfig
    estimator: ProductEstimatorConfig
    optimizer: OptimizerConfig
    seed: int = 0
    output: dict = field(default_factory=dict)
    document: dict = field(default_factory=dict)


SECTIONS = {"geometry", "bvp", "functional", "solver", "optimizer", "output"}
SOLVER_KEYS = {"epsilon", "offset", "max_steps", "wpp", "seed", "estimator",
               "forward_walks", "nd_method", "walks", "batch",
               "interior_points", "boundary_points", "russian_roulette"}
OPTIMIZER_KEYS = {"lr", "beta1", "beta2", "eps_adam", "iterations", "wpp0",
                  "wpp_t", "resample_every", "smooth_gradients"}
OUTPUT_KEYS = {"grid", "bbox", "path", "log"}


def parse_config(source, base_dir=None) -> RunConfig:
    """Build a RunConfig from a path, a JSON string, or a dict."""
    if isinstance(source, dict):
        doc = source
    elif os.path.exists(str(source)):
        base_dir = base_dir or os.path.dirname(os.path.abspath(source))
        try:
            with open(source) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config {source}: {e}") from e
    else:
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is neither a file nor JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    _check_keys(doc, SECTIONS, "config")
    if "geometry" not in doc:
        raise ConfigError("config requires a geometry section")

    boundary = _build_geometry(doc["geometry"])

    bvp_sec = dict(doc.get("bvp", {}))
    _check_keys(bvp_sec, {"sigma", "source", "dirichlet"}, "bvp")
    bvp = BVPSpec(sigma=float(bvp_sec.get("sigma", 0.0)),
                  source=make_field(bvp_sec.get("source"), base_dir))
    scene = Scene(boundary, _build_dirichlet(bvp_sec.get("dirichlet"), base_dir))

    fn_sec = dict(doc.get("functional", {}))
    _check_keys(fn_sec, {"loss", "mask", "reference", "boundary_loss",
                         "boundary_mask", "regularizers", "extend_zero"},
                "functional")
    regs = tuple((str(k), float(a)) for k, a in fn_sec.get("regularizers", []))
    functional = FunctionalSpec(
        loss=fn_sec.get("loss", "squared"),
        mask=make_mask(fn_sec.get("mask")),
        u_ref=_build_reference(fn_sec.get("reference"), base_dir),
        boundary_loss=fn_sec.get("boundary_loss"),
        boundary_mask=make_mask(fn_sec.get("boundary_mask")),
        regularizers=regs,
        extend_zero=bool(fn_sec.get("extend_zero", False)))

    sv = dict(doc.get("solver", {}))
    _check_keys(sv, SOLVER_KEYS, "solver")
    solver = SolverConfig(
        eps=float(sv.get("epsilon", 1e-3)),
        offset=(float(sv["offset"]) if "offset" in sv else None),
        max_steps=int(sv.get("max_steps", 10_000)),
        rr_enabled=bool(sv.get("russian_roulette", True)),
        walks_per_point=int(sv.get("wpp", 64)),
        forward_walks=int(sv.get("forward_walks", 1)),
        nd_method=str(sv.get("nd_method", "backward")))
    estimator = ProductEstimatorConfig(
        kind=str(sv.get("estimator", "ustat")),
        walks=int(sv.get("walks", 16)),
        batch=int(sv.get("batch", 8)),
        interior_points=int(sv.get("interior_points", 256)),
        boundary_points=int(sv.get("boundary_points", 256)))

    op = dict(doc.get("optimizer", {}))
    _check_keys(op, OPTIMIZER_KEYS, "optimizer")
    optimizer = OptimizerConfig(
        lr=float(op.get("lr", 1e-3)),
        beta1=float(op.get("beta1", 0.9)),
        beta2=float(op.get("beta2", 0.999)),
        eps_adam=float(op.get("eps_adam", 1e-8)),
        iterations=int(op.get("iterations", 200)),
        wpp0=int(op.get("wpp0", 2)),
        wpp_t=int(op.get("wpp_t", 64)),
        resample_every=int(op.get("resample_every", 100)),
        smooth_gradients=bool(op.get("smooth_gradients", False)))

    out = dict(doc.get("output", {}))
    _check_keys(out, OUTPUT_KEYS, "output")

    return RunConfig(scene=scene, bvp=bvp, functional=functional,
                     solver=solver, estimator=estimator, optimizer=optimizer,
                     seed=int(sv.get("seed", 0)), output=out, document=doc)


def serialize_config(cfg: RunConfig) -> str:
    """Emit the normalized JSON document the config was parsed from."""
    return json.dumps(cfg.document, indent=2, sort_keys=True)
