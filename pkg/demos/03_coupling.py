"""
Two copies, one noise
=====================

Start two solutions at ``+-2 e_1`` and drive them with the same increments.
With additive noise the difference is deterministic; with a small
multiplicative term it still contracts in mean square.
"""
from eispde.experiments import ExperimentConfig, run_p2
from eispde import laplacian_space, linear_drift, make_model

exp = ExperimentConfig(seed=3, paths=2000, dt=2.0 ** -6, record_every=16)

additive = make_model(laplacian_space(8), linear_drift(1.0), theta1=0.2, theta2=0.4)
r = run_p2(additive, exp)
print("additive:       decay", f"{r.details['decay_ratio']:.2e}",
      " rate", f"{r.details['ms_rate']:.4f}", " exact", f"{r.details['oracle_ms_rate']:.4f}")

mult = make_model(laplacian_space(8), linear_drift(1.0), sigma1_kind="linear", sigma1_scale=0.1,
                  theta1=0.2, theta2=0.4)
r = run_p2(mult, exp)
print("multiplicative: decay", f"{r.details['decay_ratio']:.2e}", " rate", f"{r.details['ms_rate']:.4f}")
print("status:", r.status, "-", r.notes[0] if r.notes else "")
