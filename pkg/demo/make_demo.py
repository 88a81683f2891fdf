"""Regenerate the demo inputs: synthetic flow curves plus copies of the bundled data.

Flow curves are Modified Bingham curves with yield stress and viscosity of
the measured magnitudes and a small quadratic term, with Gaussian noise.
"""

import shutil
from importlib.resources import as_file, files
from pathlib import Path

import numpy as np

from aabinder.rheology import FlowCurve, write_flow_csv

HERE = Path(__file__).parent
RATES = np.arange(0.0, 101.0, 10.0)
# mix -> w/s -> (tau0 Pa, mu_p Pa.s, C Pa.s^2)
CURVES = {
    "SF10NH8": {0.45: (6.9667, 1.7423, -0.0020), 0.50: (6.1014, 1.1531, -0.0012)},
    "SF10NH10": {0.45: (10.231, 1.5137, -0.0015), 0.50: (5.8478, 1.3813, 0.0010)},
}
NOISE_PA = 0.2
RUNS = 3


def main():
    rng = np.random.default_rng(2023)
    (HERE / "rheo").mkdir(exist_ok=True)
    for mix, by_ws in CURVES.items():
        for ws, (t0, mu, c) in by_ws.items():
            for run in range(1, RUNS + 1):
                clean = t0 + mu * RATES + c * RATES ** 2
                up = clean * 1.04 + 1.5 + rng.normal(0, NOISE_PA, RATES.size)   # thixotropic loop
                down = clean + rng.normal(0, NOISE_PA, RATES.size)
                write_flow_csv(HERE / "rheo" / f"{mix}_ws{ws:.2f}_run{run}.csv",
                               FlowCurve.from_arrays(RATES, np.round(up, 4), branch="up"),
                               FlowCurve.from_arrays(RATES[::-1], np.round(down[::-1], 4)))
    data = files("aabinder.data")
    (HERE / "thermograms").mkdir(exist_ok=True)
    for name in ("eds.csv", "strength.csv"):
        with as_file(data / name) as p:
            shutil.copy(p, HERE / name)
    for mix in ("SF10NH8", "SF20NH8", "SF10NH10", "SF20NH10"):
        with as_file(data / "thermograms" / f"{mix}.csv") as p:
            shutil.copy(p, HERE / "thermograms" / f"{mix}.csv")


if __name__ == "__main__":
    main()
