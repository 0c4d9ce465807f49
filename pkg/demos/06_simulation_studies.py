"""Seeded simulation studies at desk scale.

Each study returns a long-format table that serialises to CSV together with
a JSON manifest (configuration echo, content hashes, wall time).
"""

from wrapcop import Beta, VonMises
from wrapcop.experiments import (
    StudyConfig,
    quarter_mixture,
    run_kde_mise_study,
    run_rmse_study,
    run_signature_study,
)

sig = run_signature_study(StudyConfig(
    "signature_recovery", (2, 3), (50, 100, 200, 500), (VonMises(5.0, 0.0),), 50), threads=4)
print(sig.to_csv())

rmse = run_rmse_study(StudyConfig(
    "rmse", (2,), (100, 1000), (Beta(2.0, 5.0),), 20, margins="rank_based"), threads=4)
print(rmse.to_csv())

kde = run_kde_mise_study(StudyConfig(
    "kde_mise", (2,), (100, 500, 1000), (quarter_mixture(),), 20), threads=4)
print(kde.to_csv())
print(kde.manifest())
