"""
Fiber bunching and linear holonomies
====================================

Bunching is what makes the truncated products A^n(q)^-1 A^n(p) converge
when q sits on the strong stable leaf of p.  Here we find the boundary for
the constant family diag(e^s, e^-s), then look at a bunched rotation
cocycle's holonomies in detail.
"""
import numpy as np

from cocyclelab import CocycleField, SuspensionModel
from cocyclelab.holonomy import (
    HolonomyDivergenceError,
    bunching_certificate,
    extend_stable_holonomy,
    holonomy_along_leaf,
)
from cocyclelab.symplectic import diagonal_block, sp_inverse

model = SuspensionModel()
consts = model.hyperbolicity_constants()
print(f"base contraction lambda = {consts.lam:.6f}, predicted boundary s* = {-0.5 * np.log(consts.lam):.4f}")
for s in np.arange(0.40, 0.56, 0.02):
    cert = bunching_certificate(CocycleField.constant(model, diagonal_block(s)), 1.0, consts, 8)
    print(f"  s = {s:.2f}  ratio {cert.one_step_ratio:.3f}  {'bunched' if cert.verdict else 'not bunched'}")

# %%
A = CocycleField.from_config(model, {"d": "1", "term0": "rotation 0.5*sin(1,0,0) + 0.4*cos(0,1,0)"})
P = model.volume_sample(5, 1)
a = np.array([-0.04, -0.01, 0.0, 0.02, 0.05])
H = holonomy_along_leaf(A, P, a, "s")
print("truncation steps:", H.truncation_n)
print("tail bounds:     ", H.tail_bound)

# equivariance: H at the image pair is A(q) H A(p)^-1
q = model.stable_leaf_point(P, a)
H1 = holonomy_along_leaf(A, model.flow(P, 1.0), a * model.F.mu_s, "s")
print("equivariance residual:", np.abs(H1.matrix - A.evaluate(q) @ H.matrix @ sp_inverse(A.evaluate(P))).max())

# a far-away point on the global leaf, bridged by 3 or 6 iterates
e3 = extend_stable_holonomy(A, P[0], 0.8, 3)
e6 = extend_stable_holonomy(A, P[0], 0.8, 6)
print("bridge independence:", np.abs(e3 - e6).max())

# %%
# Without bunching the increments blow up before the leaf offset underflows.
wild = CocycleField.from_config(model, {"d": "1", "term0": "constant 5.0 0.0 0.0 0.2", "term1": "rotation 0.3*sin(1,0,0)"})
try:
    holonomy_along_leaf(wild, P, a + 0.01, "s")
except HolonomyDivergenceError as exc:
    print("unbunched:", exc)
