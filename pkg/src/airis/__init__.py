"""Joint beamforming and power allocation for active-IRS-assisted MISO links."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ChannelSet,
    CffpState,
    DimensionError,
    PaState,
    Scenario,
    achievable_rate,
    dbm_to_watt,
    snr_no_pa,
    snr_pa,
    watt_to_dbm,
)
from .channel import ChannelFileError, generate, load, save  # noqa: E402
from .pa_beta import RegressionConfig, optimize_beta, rho_of_beta  # noqa: E402
from .qcqp import KktReport, solve_lin_ellipsoid, solve_trust_region, solve_two_constraint  # noqa: E402
from .max_snr_pa import run_max_snr_pa  # noqa: E402
from .cffp import CffpVariant, run_max_ar_cffp  # noqa: E402
from .baselines import run_fixed_beta, run_no_irs, run_passive_irs, run_random_phase  # noqa: E402

__all__ = [
    "ChannelFileError",
    "ChannelSet",
    "CffpState",
    "CffpVariant",
    "DimensionError",
    "KktReport",
    "PaState",
    "RegressionConfig",
    "Scenario",
    "achievable_rate",
    "dbm_to_watt",
    "generate",
    "load",
    "optimize_beta",
    "rho_of_beta",
    "run_fixed_beta",
    "run_max_ar_cffp",
    "run_max_snr_pa",
    "run_no_irs",
    "run_passive_irs",
    "run_random_phase",
    "save",
    "snr_no_pa",
    "snr_pa",
    "solve_lin_ellipsoid",
    "solve_trust_region",
    "solve_two_constraint",
    "watt_to_dbm",
]
