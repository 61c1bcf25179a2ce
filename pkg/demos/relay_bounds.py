"""Primitive-relay bounds for the amplitude-damping splitter.

For each qubit-link rate CQ12, prints the decode-forward rate, the
entanglement-formation rate and the cutset expression.  Decode-forward stops
growing once the link carries all of I(A1>B1); the entanglement-formation
scheme keeps gaining because Receiver 1 only has to ship a compressed
version of its output.

Note the last column: the cutset expression here is evaluated as stated,
with the auxiliary T on the input side, and falls below both achievable
rates on this channel.  It is printed for comparison, not as a bound.

    python3 demos/relay_bounds.py
"""
from qbc import bundled, relay_bounds

bc = bundled("amplitude_split")
print("  CQ12      DF      EF   cutset")
for cq in (0.0, 0.125, 0.25, 0.5):
    b = relay_bounds(bc, cq, restarts=6)
    print(f"{cq:6.3f}  {b.decode_forward:6.4f}  {b.eof_lower:6.4f}  {b.cutset:7.4f}")
