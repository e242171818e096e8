"""Wide-spectrum attack audit toolkit for QKD optical schemes.

Composes attack-channel transmittance from per-component spectral records,
finds the eavesdropper's optimal wavelength, and evaluates decoy-state BB84
and MDI secure key rates under Trojan-horse leakage, plus power budgets for
short-wavelength injection and leakage integrals for detector backflash.
"""

from .spectral import (
    Band,
    DEFAULT_BAND,
    Spectrum,
    Unit,
    resample,
    stitch,
    sum_db,
    upper_envelope,
)
from .ingestion import (
    ComponentRecord,
    ScanPair,
    build_record,
    clamp_to_floor,
    dynamic_range,
    load_component,
    save_component,
    transmittance_from_scans,
)
from .channel import (
    AttackCase,
    AttackChannelSpec,
    ChainLink,
    EveBudget,
    backflash_mu_leak,
    compose,
    margin_orders,
    power_at_target,
    trojan_mu_out,
    worst_case,
)
from .leakage import (
    DecoyDeviation,
    LeakageParams,
    binary_entropy,
    decoy_deviation,
    delta_prime,
    phase_error_with_coin,
    q_weight,
)
from .bb84 import (
    Bb84Params,
    RatePoint,
    SystemParams,
    TABLE_PARAMS,
    decoy_bounds,
    key_rate,
    max_distance,
    simulate_channel,
)
from .mdi import (
    MdiParams,
    MdiRatePoint,
    mdi_decoy_bounds,
    mdi_key_rate,
    mdi_max_distance,
    simulate_mdi_channel,
)
from .optimize import (
    OptProblem,
    OptimizerSettings,
    bb84_problem,
    mdi_problem,
    optimize,
    optimize_along_distance,
)
from .sweep import find_mu_out_for_reduction

__version__ = "0.1.0"
