"""Regenerates crates/core/tests/golden/maxre_order2.json.

The beam response is computed through the Legendre addition theorem,
independently of the per-channel spherical harmonics used in the crate.
"""
import json

import numpy as np
from numpy.polynomial import legendre as L

ORDER = 2

roots = L.legroots([0] * (ORDER + 1) + [1])
r = float(max(roots))
gains = [float(L.legval(r, [0] * n + [1])) for n in range(ORDER + 1)]
norm = sum((2 * n + 1) * g for n, g in enumerate(gains))


def unit(az, el):
    return np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])


def response(steer, az, el):
    c = float(np.clip(unit(steer, 0.0) @ unit(az, el), -1.0, 1.0))
    return sum((2 * n + 1) * g * L.legval(c, [0] * n + [1]) for n, g in enumerate(gains)) / norm


rng = np.random.default_rng(20)
cases = []
for steer in np.deg2rad([0.0, 72.0, 144.0, 216.0, 288.0, 37.5]):
    for _ in range(8):
        az = float(rng.uniform(-np.pi, np.pi))
        el = float(rng.uniform(-np.pi / 2, np.pi / 2))
        cases.append({"steering_azimuth": float(steer), "azimuth": az, "elevation": el, "response": float(response(steer, az, el))})

with open("crates/core/tests/golden/maxre_order2.json", "w") as f:
    json.dump({"order": ORDER, "gains": gains, "cases": cases}, f, indent=1)
    f.write("\n")
