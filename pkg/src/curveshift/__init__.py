"""Intraday electricity price models built on shifted day-ahead auction curves.

The library models hourly intraday prices by horizontally shifting the
day-ahead supply curve as a function of wind/solar forecast errors, next to
linear, quadratic, and mixture benchmarks, with rolling backtests and a
capacity-expansion volatility study on top.
"""

from .curves import (
    CurvePanel,
    Equilibrium,
    InelasticDemand,
    ShiftResult,
    StepCurve,
    decompose_shift,
    intersect,
    shift_supply,
    to_inelastic,
)
from .data import (
    Dataset,
    HourRecord,
    Provenance,
    SynthConfig,
    generate_synthetic,
    ingest,
    round_price,
)
from .errors import (
    CurveShiftError,
    DimensionMismatch,
    EmptyInput,
    InsufficientData,
    InvalidConfig,
    MissingConstituent,
    MonotonicityViolation,
    NegativeRadicand,
    NoIntersection,
    NonFiniteObjective,
    RankDeficient,
    SchemaError,
    UnitError,
)
from .estimation import NlsOptions, NlsResult, OlsResult, nls_fit, ols_fit
from .evaluation import BacktestConfig, BacktestReport, DmResult, dm_test, mae, rmse, run_backtest
from .features import (
    FEATURE_NAMES,
    FeatureVector,
    ScaleConfig,
    build_features,
    scale_features,
    sd_scaling_factor,
)
from .models import (
    BETA_LENGTH,
    MIXTURES,
    MODEL_IDS,
    FitOptions,
    ModelFit,
    ModelSpec,
    fit_model,
    predict_cm,
    predict_dataset,
    predict_lm1,
    predict_lm2,
    predict_mixture,
    predict_naive,
    predict_nlm,
    predict_qlm,
    predict_record,
    transform_records,
)
from .scenario import (
    ScenarioGrid,
    ScenarioReport,
    ShiftScenario,
    run_scenario,
    simulate_shift_comparison,
)

__version__ = "0.1.0"
