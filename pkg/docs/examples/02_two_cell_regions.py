"""Which strategy pair wins where, for two cells.

User 1 sits ``x1 R`` left of the cell edge and user 2 ``x2 R`` right of it.
At low edge SNR both BSs beamform selfishly; at high edge SNR both cancel.
In between the map splits into all four pairs.
"""
import numpy as np

from adaptive_icic import build_scenario, select_joint

grid = np.round(np.arange(0.05, 1.0, 0.1), 10)
symbol = {"(BF,BF)": ".", "(BF,IC)": "b", "(IC,BF)": "i", "(IC,IC)": "#"}

for p0_db in (-5.0, 5.0, 10.0):
    print(f"P0 = {p0_db:g} dB   rows: x1 from edge, columns: x2 from edge")
    for x1 in grid:
        row = ""
        for x2 in grid:
            _, budget = build_scenario("two_cell", (-x1, x2), p0_db)
            row += symbol[select_joint(budget, 4)[0].label()]
        print(f"  {x1:4.2f} {row}")
    print()
