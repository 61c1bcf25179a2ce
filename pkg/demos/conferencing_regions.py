"""How a bit link between the receivers grows the classical region.

Computes the common/private region of the degraded binary cascade
(crossovers 0.1 then 0.2) for a few link rates and prints the corner points.
The link lets Receiver 1 forward part of the common message to Receiver 2,
so the common-rate intercept grows by C12 until it meets Receiver 1's sum-rate
cap; the private-rate intercept does not move.

    python3 demos/conferencing_regions.py
"""
import numpy as np

from qbc import bundled, classical_region

bc = bundled("bsc_cascade")
for c12 in (0.0, 0.1, 0.25, 0.5):
    region = classical_region(bc, c12, n_weights=17, restarts=4)
    print(f"C12 = {c12:.2f}   max R0 = {region.max_along(0):.4f}   max R1 = {region.max_along(1):.4f}")
    corners = np.round(region.hull, 4) + 0.0  # +0.0 folds -0.0 into 0.0
    _, first = np.unique(corners, axis=0, return_index=True)
    for x, y in corners[np.sort(first)]:
        print(f"    ({x:.4f}, {y:.4f})")
