"""Estimating the generator: maximum likelihood and kernel density estimation."""

import numpy as np

from wrapcop import CopulaModel, Mixture, TruncNormal
from wrapcop.inference import fit_kde, fit_parametric, pseudo_observations, wrapped_sums

truth = Mixture(0.25, TruncNormal(0.25, 0.1), TruncNormal(0.75, 0.1))
model = CopulaModel(truth, (0, 1))
u = pseudo_observations(model.sample(seed=5, n=2000))
y = wrapped_sums(u, (0, 1))

# %% Parametric fits ranked by AIC
fits = [fit_parametric(y, fam, signature=(0, 1))
        for fam in ("Beta", "VonMises", "TruncNormal", "Mixture(TruncNormal,TruncNormal)")]
for f in sorted(fits, key=lambda f: f.aic):
    params = ", ".join(f"{k}={v:.3f}" for k, v in f.params.items())
    print(f"{f.family:34s} AIC {f.aic:9.2f}  rho {f.rho:+.3f}  [{params}]")

# %% Kernel density estimate and its modes
kde = fit_kde(y)
print("bandwidth", round(kde.bandwidth, 4), "modes", np.round(kde.modes(), 3))
mise = np.trapezoid((kde.values - truth.pdf(kde.grid)) ** 2, kde.grid)
print("integrated squared error", round(float(mise), 4))
