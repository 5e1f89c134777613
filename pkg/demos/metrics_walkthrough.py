"""Walk through the J / F / J&F metrics on small hand-made masks.

Run with:  python demos/metrics_walkthrough.py
"""

import numpy as np

from rvosh.metrics import boundary_f, default_tolerance, jaccard, jf_mean, mask_boundary

# A small square and the same square shifted one pixel to the right.
pred = np.zeros((8, 8), bool)
pred[2:5, 2:5] = True
gt = np.roll(pred, 1, axis=1)

print("predicted mask:")
print(pred.astype(int))
print("ground truth (shifted right by one):")
print(gt.astype(int))

j = jaccard(pred, gt)
print(f"\nJ (intersection over union) = {j:.4f}")

# The boundary is every foreground pixel with a background 4-neighbor.
print("\npredicted boundary:")
print(mask_boundary(pred).astype(int))

# With tolerance 0 the boundaries must coincide exactly; with tolerance 1
# the one-pixel shift is forgiven.
for tolerance in (0, 1, 2):
    f = boundary_f(pred, gt, tolerance)
    print(f"F at tolerance {tolerance}: {f:.4f}")

f = boundary_f(pred, gt, 1)
print(f"\nJ&F (arithmetic mean) at tolerance 1 = {jf_mean(j, f):.4f}")

# The default tolerance scales with the image diagonal.
for shape in ((8, 8), (480, 854), (1080, 1920)):
    print(f"default tolerance for {shape[0]}x{shape[1]}: {default_tolerance(*shape)} px")

# Empty-mask conventions: two empties agree perfectly, one empty scores zero.
empty = np.zeros((8, 8), bool)
print(f"\nJ(empty, empty) = {jaccard(empty, empty)}")
print(f"J(empty, square) = {jaccard(empty, gt)}")
