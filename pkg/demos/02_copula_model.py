"""Copula models: density, sampling, distribution function and tails.

``CopulaModel(f, s)`` is the d-variate copula whose density is ``f`` applied
to the wrapped sum of the coordinates, each coordinate reflected where the
signature ``s`` has a one.
"""

import numpy as np

from wrapcop import Beta, CopulaModel, VonMises, wrapped_sum

model = CopulaModel(VonMises(2.0, 1.0), (0, 1, 1))
print(model)

# %% Density and sampling
u = model.sample(seed=1, n=50_000)
print("sample shape", u.shape, "margin means", u.mean(axis=0).round(3))
print("density at the centre", model.density([0.5, 0.5, 0.5]))

# %% The wrapped sum under the true signature follows the generator
y = wrapped_sum(u, model.signature)
print("mean of wrapped sums", y.mean().round(4), "vs generator mean",
      round(model.generator.moments().mean, 4))

# %% Distribution function with a Monte Carlo error estimate (d >= 3)
value, err = model.cdf_with_error([0.4, 0.6, 0.5])
empirical = np.mean(np.all(u <= [0.4, 0.6, 0.5], axis=1))
print(f"C(0.4, 0.6, 0.5) = {value:.4f} +/- {err:.1e}; empirical {empirical:.4f}")

# %% Bivariate partial derivatives and tail ratios
biv = CopulaModel(Beta(1.5, 1.5), (0, 0))
print("dC/du1 at (0.3, 0.7):", round(biv.partial_derivative(0, [0.3, 0.7]), 4))
for t in (1e-2, 1e-3):
    lower, upper = biv.tail_ratio(t)
    print(f"tail ratios at t={t:g}: lower {lower:.4f}, upper {upper:.4f}")

# %% Characteristic function by its Fourier series
print("phi(1, -2) =", np.round(biv.char_function([1.0, -2.0]), 5))
