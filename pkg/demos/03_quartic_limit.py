"""Quartic fluctuations at a critical point.

With J = 2 I and equal species, the Hessian of G vanishes at the origin.
Sums must then be scaled by N_l^(3/4), and the limit density is
exp(-(x1^4 + x2^4)/12) in that coordinate.
"""

import math

import numpy as np

from mscw import (
    ModelSpec,
    SpeciesPartition,
    build_limit_law,
    compare_to_law,
    exact_joint,
    find_global_minima,
    law_moments,
    normalized_moments,
    validate_model,
)

model = validate_model(ModelSpec.from_sizes((1, 1), [[2.0, 0.0], [0.0, 2.0]]))
pt = find_global_minima(model).points[0]
law = build_limit_law(pt, model)
target = law_moments(law)
print("classification:", pt.k.value, " normalization exponents:", law.exponents)
print("law E[x^2] =", target.covariance[0, 0], " Gamma formula:",
      math.sqrt(12) * math.gamma(0.75) / math.gamma(0.25))
print("law E[x^4] =", target.fourth[0])

print("\n  N_l   E[x^4]    rescaled E[y^4]   TV distance")
for n in (100, 200, 500, 1000):
    dist = exact_joint(model, SpeciesPartition((n, n)))
    rep = normalized_moments(dist, center=np.zeros(2), exponents=law.exponents)
    d = compare_to_law(rep, law, dist)
    # y = x / alpha^(1/4) is the coordinate in which the density reads exp(-y^4/24)
    print(f"{n:6d}   {rep.fourth[0]:.4f}    {rep.fourth[0] / model.alphas[0]:.4f}           {d.tv:.4f}")
