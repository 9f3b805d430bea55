"""Where are the minima of G, and what kind are they?

Walks through the three two-species couplings that show every behaviour the
classifier knows about, then a coupling strong enough to split the minimum
in two.
"""

import numpy as np

from mscw import ModelSpec, find_global_minima, validate_model

couplings = {
    "weak, ferromagnetic cross term": [[0.8, 0.3], [0.3, 0.8]],
    "critical on both species": [[2.0, 0.0], [0.0, 2.0]],
    "critical on species 1 only": [[2.0, 0.0], [0.0, 1.0]],
    "strong: two ordered phases": [[3.0, 0.4], [0.4, 3.0]],
}

for label, J in couplings.items():
    model = validate_model(ModelSpec.from_sizes((1, 1), J))
    minima = find_global_minima(model)
    print(f"\n{label}  J={J}")
    for pt in minima.points:
        lam = np.round(pt.hessian_eigenvalues, 6)
        print(f"  mu={np.round(pt.mu, 6)}  G={pt.value:+.6f}  {pt.k.value:<24} Hessian eigenvalues {lam}")
    if len(minima) > 1:
        print(f"  distance between minima: {minima.delta_bar:.6f}")

# A coupling that is not positive definite has no convex pressure functional,
# and the search refuses it.
bad = validate_model(ModelSpec.from_sizes((1, 1), [[1.0, 2.0], [2.0, 1.0]]))
print(f"\nJ=[[1,2],[2,1]]: positive definite = {bad.positive_definite}, "
      f"smallest eigenvalue {bad.smallest_eigenvalue:+.3f}")
