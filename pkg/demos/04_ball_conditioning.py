"""Two ordered phases: condition on one of them.

With two symmetric global minima the unconditioned sums are bimodal. Inside
a ball around +mu* of radius below the minima separation, they behave like
a Gaussian around +mu* again.
"""

import numpy as np

from mscw import (
    ModelSpec,
    SpeciesPartition,
    build_limit_law,
    compare_to_law,
    conditional_joint,
    exact_joint,
    find_global_minima,
    normalized_moments,
    validate_model,
)

model = validate_model(ModelSpec.from_sizes((1, 1), [[3.0, 0.4], [0.4, 3.0]]))
minima = find_global_minima(model)
plus = minima.points[-1]
radius = minima.delta_bar / 2
print("minima:", [np.round(p.mu, 6).tolist() for p in minima.points], " ball radius:", round(radius, 6))

full = exact_joint(model, SpeciesPartition((200, 200)))
print("unconditioned mean magnetization:", np.round(full.mean_magnetization(), 10))

law = build_limit_law(plus, model)
print("\n  N_l   mean magnetization        cov rel. error   mass near boundary")
for n in (100, 200, 400, 800):
    dist = conditional_joint(model, SpeciesPartition((n, n)), plus.mu, radius, minima.delta_bar)
    rep = normalized_moments(dist, center=plus.mu, exponents=law.exponents)
    d = compare_to_law(rep, law)
    print(f"{n:6d}   {np.round(dist.mean_magnetization(), 6)}   {d.cov_rel:14.5f}   {dist.boundary_mass:.2e}")
