"""From a raw IQ cube to HPD matrices per range cell.

A cube is written as CSV, converted to the binary MIGIQ1 layout, read
back, and cut into length-N pulse windows.
"""
import tempfile
from pathlib import Path

import numpy as np

from ldamig import build_hpd
from ldamig.formats import cube_to_samples, load_iq, write_iq, write_iq_csv
from ldamig.signal import sample_gaussian
from ldamig.simulation import Scene

rng = np.random.default_rng(0)
scene = Scene()
pulses, cells = 64, 5
cube = np.stack([sample_gaussian(scene.C, pulses // 8, rng).ravel() for _ in range(cells)], axis=1)

with tempfile.TemporaryDirectory() as tmp:
    csv_path = Path(tmp) / "cube.csv"
    bin_path = Path(tmp) / "cube.migiq"
    write_iq_csv(cube, csv_path)
    write_iq(load_iq(csv_path), bin_path)
    back = load_iq(bin_path)
    print(f"csv {csv_path.stat().st_size} bytes, MIGIQ1 {bin_path.stat().st_size} bytes")
    print(f"max round-trip error (float32 storage): {np.max(np.abs(back - cube)):.1e}")

windows = cube_to_samples(back, N=8)
R = build_hpd(windows)
print(f"{windows.shape[0]} cells x {windows.shape[1]} windows -> HPD stack {R.shape}")
