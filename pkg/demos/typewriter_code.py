"""Finite-length binning code on a channel limited by Receiver 2.

Receiver 1 sees the 25-ary input noiselessly; Receiver 2 sees it through a
typewriter channel that blurs each symbol over 17 neighbours, so the common
rate is capped by log2(25/17) ~ 0.556 bits when there is no link.  Running
the random superposition/binning code at 90% of that cap shows the block
error falling with n, while a rate 0.28 bits above the cap stays unreliable.

    python3 demos/typewriter_code.py
"""
import numpy as np

from qbc.channels import classical_broadcast
from qbc.codesim import build_codebook, simulate_classical

k, width = 25, 17
w2 = np.zeros((k, k))
for x in range(k):
    w2[x, (x + np.arange(width)) % k] = 1.0 / width
bc = classical_broadcast(np.einsum("xa,xb->xab", np.eye(k), w2))
pmf = np.eye(k) / k
cap = np.log2(k / width)

for label, r0, lengths in (("inside", 0.9 * cap, (6, 8, 10, 12)), ("outside", 10 / 12, (12,))):
    for n in lengths:
        cb = build_codebook(pmf, n, r0, 0.0, 0.0, seed=0)
        res = simulate_classical(bc, cb, 2000, seed=1)
        print(f"{label:8s} n = {n:2d}  R0 = {cb.k0 / n:.3f}  error = {res.empirical_error:.3f}")
