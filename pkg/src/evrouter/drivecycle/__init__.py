from .dynamics import (
    DynamicsError,
    SpeedProfile,
    VehicleDynamicsParams,
    cycle_energy,
    instantaneous_power,
    load_dynamics,
    simulate_cycle,
)
from .fitting import (
    DEFAULT_MASSES,
    DEFAULT_SLOPES,
    FitError,
    RegressionFit,
    SimSample,
    cubic_check,
    fit_patterns,
    fit_quadratic,
    generate_dataset,
    read_dataset_csv,
    samples_from_coefficients,
    write_dataset_csv,
)
from .profiles import bundled_profiles, full_cycle, load_profile_csv, make_profile, save_profile_csv
