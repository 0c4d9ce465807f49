"""Concordance: closed forms, the quadrature oracle and sample estimates."""

from wrapcop import Beta, CopulaModel, Tabulated, Triangular, VonMises
from wrapcop.concordance import closed_form_concordance, oracle_concordance, sample_concordance
from wrapcop.generator import rotate

# %% Closed forms from the generator moments, checked by brute force
for gen in (Triangular(1.0, 1.0), Beta(1.5, 1.5), VonMises(2.0, 1.0)):
    for sig in ((0, 0), (0, 1)):
        model = CopulaModel(gen, sig)
        a, b = closed_form_concordance(model), oracle_concordance(model)
        print(f"{gen!r:40s} {sig}: rho {a.rho:+.5f}/{b.rho:+.5f}  "
              f"tau {a.tau:+.5f}/{b.tau:+.5f}  xi {a.xi:.5f}/{b.xi:.5f}")

# %% The largest Kendall's tau among signature-(0,0) models is 1/6
print("tau of Unif(1/4, 3/4):", closed_form_concordance(
    CopulaModel(Tabulated((0.0, 1.0, 1.0, 0.0)), (0, 0))).tau)

# %% Sample versions converge to the model values
model = CopulaModel(rotate(VonMises(-17.19, -0.80), 0.5), (0, 1))
print("model :", closed_form_concordance(model))
print("sample:", sample_concordance(model.sample(seed=3, n=100_000)))
