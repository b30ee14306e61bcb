"""How growing wind/solar fleets would amplify intraday price volatility.

Scales the feature vector as if capacity grew by a factor (1 + gamma) with
correlation rho between old and new output, then recomputes model prices.
The linear model's dispersion grows roughly with the scaling factor; the
curve-shift model reacts non-linearly once shifts reach the steep part of
the supply staircase.
"""

from curveshift import (
    ScenarioGrid,
    SynthConfig,
    fit_model,
    generate_synthetic,
    run_scenario,
    transform_records,
)

# a calm market with large forecast errors, so the error-driven part of the
# price variance is visible next to the ordinary daily swing
cfg = SynthConfig(days=100, noise_sd=1.0, demand_swing=3000.0,
                  wind_mae=2200.0, solar_mae=900.0)
dataset = generate_synthetic(cfg, seed=3)
panel = transform_records(list(dataset))
fit_lm2 = fit_model("lm2", dataset)
fit_nlm = fit_model("nlm", dataset, panel=panel)

grid = ScenarioGrid()  # gammas 0.1/1/5, rhos 0/.5/.8, all technologies
report = run_scenario(dataset, fit_lm2, fit_nlm, grid, panel=panel)

print("relative SD of modeled prices (baseline gamma=0, rho=0 equals 1):\n")
print(f"{'':>12}{'lm2':>30}{'nlm':>30}")
print(f"{'gamma rho':>12}{'wind':>10}{'solar':>10}{'w+s':>10}"
      f"{'wind':>10}{'solar':>10}{'w+s':>10}")
cells = {(c.model_id, c.technology, c.gamma, c.rho, c.metric): c for c in report.cells}
for gamma in grid.gammas:
    for rho in grid.rhos:
        line = f"{gamma:>6g} {rho:>5g}"
        for model in ("lm2", "nlm"):
            for tech in ("wind", "solar", "wind+solar"):
                line += f"{cells[(model, tech, gamma, rho, 'sd')].relative:>10.3f}"
        print(line)
print(f"\nbaseline SDs: lm2 {report.baselines[('lm2', 'sd')]:.3f} EUR, "
      f"nlm {report.baselines[('nlm', 'sd')]:.3f} EUR")

tail = cells[("nlm", "wind+solar", 5.0, 0.8, "q99.9%")]
print(f"\nupper-tail (99.9%) deviation, nlm wind+solar at gamma=5, rho=0.8: "
      f"{tail.relative:.2f}x the baseline, clamp rate {tail.clamp_rate:.1%}")
print("Diversifying new capacity (low rho) tempers every column; large "
      "correlated expansions inflate the curve model's tails far faster "
      "than the linear model suggests.")
