"""
Lyapunov spectra of symplectic cocycles
=======================================

A walk through the exponent estimators on the cat-map suspension with
unit roof: a constant hyperbolic cocycle where the answer is known, an
isometric (rotation) cocycle with zero exponents, and a coupled Sp(4)
cocycle where the only checks available are the symmetries.
"""
import numpy as np

from cocyclelab import CircleCocycle, CocycleField, SuspensionModel
from cocyclelab.lyapunov import full_spectrum, integrated_exponent, periodic_exponents, top_exponent

model = SuspensionModel()
P = model.volume_sample(1, seed=0)[0]

# diag(2, 1/2) everywhere: exponents are exactly +-log 2
A = CocycleField.constant(model, np.diag([2.0, 0.5]))
spec = full_spectrum(A, P, 10_000)
print("constant diag(2,1/2):", spec.exponents, " log 2 =", np.log(2))

# rotations are isometries, so every product has norm 1
R = CocycleField.from_config(model, {"d": "1", "term0": "rotation 0.5*sin(1,0,0) + 0.4*cos(0,1,0)"})
print("rotation cocycle top exponent:", integrated_exponent(R, model.volume_sample(50, 1), 1000).value)

# %%
# An Sp(4) cocycle.  Rotation and diagonal terms act the same way on both
# planes of R^4, so on their own they give two copies of an Sp(2) cocycle;
# a constant symplectic shear couples the planes.  Exponents come in +-
# pairs and sum to zero; the pairing residual measures the departure.
shear = "constant 1 0 0 0.5  0 1 0.5 0  0 0 1 0  0 0 0 1"
S = CocycleField.from_config(
    model,
    {
        "d": "2",
        "term0": "rotation 0.3*sin(1,0,0) + 0.2*cos(0,1,1)",
        "term1": "diagonal 0.2 + 0.2*cos(1,1,0)",
        "term2": shear,
    },
)
spec4 = full_spectrum(S, P, 10_000)
print("Sp(4) spectrum:", np.round(spec4.exponents, 5))
print("  pairing residual", spec4.pairing_residual, " sum", spec4.exponent_sum)
print(spec4.convergence_csv())

# %%
# On a periodic center leaf the exponent is an eigenvalue computation.
leaf = model.leaf_with_period(3)
circle = CircleCocycle(S, leaf)
exact = periodic_exponents(S, leaf, 0.5)
it = top_exponent(circle, 0.5, 6000)
print(f"period-3 leaf: eigenvalue {exact.top:.6f}, iterated {it.value:.6f}")
