#!/usr/bin/env python3
"""Render a synthetic stereo pair, match it, and save a false-color depth map.

Artifacts land in demos/out/: the raw pair, the disparity PGM with its
sidecar, and a jet-colored visualization.
"""

from pathlib import Path

import numpy as np

from stereosentry.camera_model import default_rig
from stereosentry.imgio import write_ppm
from stereosentry.simworld import default_scene, render_stereo
from stereosentry.stereo import colorize_jet, depth_from_disparity, match_disparity

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

rig = default_rig()
scene = default_scene()

# one stereo frame from the default scene, head level
frame = render_stereo(scene, rig, (0.0, 0.0, 0.0), 0.0)
write_ppm(frame.left.pixels, out / "left.ppm")
write_ppm(frame.right.pixels, out / "right.ppm")

disp = match_disparity(frame.left, frame.right)
print(f"valid disparity: {100 * (1 - disp.invalid_fraction):.1f}% of pixels")

depth = depth_from_disparity(disp, rig.left.fx, rig.baseline)
valid = depth.values[np.isfinite(depth.values)]
print(f"depth range: {valid.min():.2f} .. {valid.max():.2f} m, "
      f"median {np.median(valid):.2f} m")

# compare against the renderer's own ground truth where both are defined
gt = frame.gt_depth_left.values
both = np.isfinite(depth.values) & np.isfinite(gt)
err = np.abs(depth.values[both] - gt[both])
print(f"median |error| vs ground truth: {np.median(err) * 100:.1f} cm")

disp.save(out / "disparity.pgm")
write_ppm(colorize_jet(disp.values), out / "disparity_jet.ppm")
print(f"wrote {out / 'disparity_jet.ppm'}")
