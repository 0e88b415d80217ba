"""Smoke test for the radgrid Python bindings.

Build and install first:  pip install --no-build-isolation -e crates/py
"""

import math
import os
import tempfile

import radgrid_py as rg


def check_sensor_model():
    assert abs(sum(rg.shift_weights(2)) - 1.0) < 1e-12
    model = rg.SensorModel(k_pos=1, k_range_rate=1)
    z = rg.Detection(80.0, 0.0, 15.0)
    peak = model.occupancy(80.0, 0.0, z)
    assert peak > model.occupancy(80.0 + model.delta_range / 2, 0.0, z)
    assert model.free(85.0, 0.0, z) == 0.0
    assert model.free(40.0, 0.0, z) > 0.0
    # Motion across the line of sight is invisible to Doppler.
    a = model.velocity((80.0, 0.0), (15.0, 0.0), z)
    b = model.velocity((80.0, 0.0), (15.0, 7.0), z)
    assert a > 0.0 and abs(a - b) <= 1e-12 * a
    hyps = model.range_rate_hypotheses(15.0)
    assert len(hyps) == 3 and abs(sum(p for _, p in hyps) - 1.0) < 1e-12


def check_surface():
    nx, ny, values = rg.surface("occ", resolution=1.0)
    assert len(values) == nx * ny and max(values) > 0.0
    try:
        rg.surface("bogus")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown model accepted")


def check_grid():
    scans = rg.simulate("static-corridor", seed=3)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "corridor.log")
        rg.write_scan_log(path, scans)
        back = rg.read_scan_log(path)
    assert len(back) == len(scans)
    assert [repr(z) for z in back[0][1]] == [repr(z) for z in scans[0][1]]

    grid = rg.GridMap(representation="ds", seed=1, start=scans[0][0].position)
    for pose, detections in scans[:10]:
        report = grid.step(pose, detections)
    assert grid.cycle == 10 and report["cycle"] == 9
    assert set(report["phase_ms"]) >= {"occupancy_update", "predict"}
    probs = grid.probabilities()
    nx, ny, cell, origin = grid.occupancy_grid
    assert len(probs) == nx * ny
    assert all(0.0 <= p <= 1.0 for p in probs)
    masses = grid.masses()
    assert masses is not None and all(o + f <= 1.0 + 1e-12 for o, f in masses)
    stats = grid.velocity_stats()
    vnx, vny, _, _ = grid.velocity_grid
    assert len(stats) == vnx * vny
    assert all(math.isfinite(v[0][0]) for v in stats)
    assert grid.particle_count > 0
    assert len(grid.snapshot_bytes()) > 0

    try:
        grid.step(rg.EgoPose(timestamp=-1.0), [])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-order scan accepted")


if __name__ == "__main__":
    check_sensor_model()
    check_surface()
    check_grid()
    print("python smoke test passed")
