#!/usr/bin/env python3
"""Regenerates the scenario fixtures in this directory."""

import json
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent
DEPTH = 12.0


def polyline(fn, y0, y1, step=2.0):
    n = int(round((y1 - y0) / step))
    return [[round(v, 6) for v in fn(y0 + (y1 - y0) * k / n)] for k in range(n + 1)]


def base(name, seed, ticks, surface, branches, probe, gaze):
    return {
        "schema_version": 1,
        "name": name,
        "seed": seed,
        "duration_ticks": ticks,
        "tick_rate_hz": 30.0,
        "geometry": {"width_px": 256, "depth_px": 256, "pixel_pitch": 0.15},
        "phantom": {"surface": surface, "root": 0, "branches": branches},
        "probe": probe,
        "gaze": gaze,
    }


def flat_straight():
    line = polyline(lambda y: (0.0, y, -DEPTH), 0.0, 150.0, step=10.0)
    return base(
        "flat_straight", 11, 600,
        {"kind": "flat", "height": 0.0, "extent": {"x_min": -40, "x_max": 40, "y_min": 0, "y_max": 150}},
        [{"id": 0, "centerline": line, "radius": [3.0] * len(line), "parent": None}],
        {"x": 0.0, "y": 10.0, "theta": 0.0},
        {"source": "scripted", "schedule": [{"from_y_mm": 0.0, "branch": 0}], "noise_px": 3.0},
    )


def cylinder_tilt():
    arm = 60.0
    line = polyline(lambda y: (0.0, y, arm - DEPTH), 0.0, 150.0, step=10.0)
    return base(
        "cylinder_tilt", 21, 450,
        {"kind": "cylinder", "radius": arm, "extent": {"x_min": -45, "x_max": 45, "y_min": 0, "y_max": 150}},
        [{"id": 0, "centerline": line, "radius": [3.0] * len(line), "parent": None}],
        {"x": 0.0, "y": 10.0, "theta": 0.25},
        {"source": "none"},
    )


def skin(x, y):
    return 0.04 * x + 1.5 * math.sin(math.pi * y / 150.0)


def bifurcation():
    junction = 40.0
    split = 12.0

    def trunk(y):
        return (0.0, y, skin(0.0, y) - DEPTH)

    def side(y):
        t = min(max((y - junction) / 40.0, 0.0), 1.0)
        x = split * t * t * (3.0 - 2.0 * t)
        return (x, y, skin(x, y) - DEPTH)

    nx, ny = 9, 16
    xs = [-40.0 + 80.0 * i / (nx - 1) for i in range(nx)]
    ys = [150.0 * j / (ny - 1) for j in range(ny)]
    heights = [round(skin(x, y), 6) for y in ys for x in xs]

    t0 = polyline(trunk, 0.0, junction)
    b1 = polyline(trunk, junction, 150.0)
    b2 = polyline(side, junction, 150.0)
    return base(
        "bifurcation", 31, 780,
        {"kind": "spline", "nx": nx, "ny": ny, "heights": heights,
         "extent": {"x_min": -40, "x_max": 40, "y_min": 0, "y_max": 150}},
        [
            {"id": 0, "centerline": t0, "radius": [3.0] * len(t0), "parent": None},
            {"id": 1, "centerline": b1, "radius": [2.8] * len(b1), "parent": 0},
            {"id": 2, "centerline": b2, "radius": [2.2] * len(b2), "parent": 0},
        ],
        {"x": 0.0, "y": 5.0, "theta": 0.0},
        {
            "source": "scripted",
            "schedule": [{"from_y_mm": 0.0, "branch": 0}, {"from_y_mm": 45.0, "branch": 1},
                         {"from_y_mm": 60.0, "branch": 2}],
            "noise_px": 3.0,
        },
    )


def main():
    for make in (flat_straight, cylinder_tilt, bifurcation):
        doc = make()
        (HERE / f"{doc['name']}.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
