"""
Positivity survives small perturbations
=======================================

Start from the perturbed cocycle of the previous demo and add random
smooth symplectic perturbations of sup size delta.  A short version of the
openness experiment: few perturbations, one sweep level.
"""
from cocyclelab.config import ExperimentConfig
from cocyclelab.experiments import run_experiment

cfg = ExperimentConfig().with_experiment(name="openness", n_perturbations=5, n_sweep=2, delta_grid="30")
rep = run_experiment(cfg)
print("delta =", rep.results["delta"])
for p in rep.results["perturbations"]:
    print(f"  lambda+ {p['value']:.5f} +- {p['std_error']:.5f}")
print("sweep:", rep.results["sweep"])
print("verdicts:", rep.verdicts)
