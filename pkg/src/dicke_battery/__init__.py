"""Collective-dissipation quantum battery: sector generators, steady states, ergotropy."""

from .dicke import (
    Chi,
    LadderCoefficients,
    SchurTransform,
    SectorLabel,
    degeneracy,
    dicke_states,
    enumerate_sectors,
    ladder_coefficients,
    product_gibbs_sector_weights,
    schur_transform,
)
from .liouville import (
    BathParams,
    BohrSector,
    DickeRateGenerator,
    FullLiouvillian,
    SectorGenerator,
    SectorKind,
    build_dicke_rate_generator,
    build_full_liouvillian,
    build_sector_generator,
    classify_sector,
    enumerate_bohr_sectors,
    gershgorin_gap,
)
from .steady import (
    Block,
    BlockState,
    ConvergenceError,
    FullState,
    collective_steady_state,
    ladder_fixed_point,
    project_to_blocks,
    steady_state_full,
)
from .ergotropy import (
    EnergyLevels,
    ErgotropyReport,
    energy,
    ergotropic_balance,
    ergotropy,
    ergotropy_closed_form,
    haar_unitary,
    steady_ergotropy,
)
from .dynamics import (
    StiffnessError,
    Trajectory,
    early_time_collapse_check,
    evolve_full,
    evolve_sector,
    evolve_symmetric,
    locate_optimal_alpha_c,
)
from .analysis import (
    LeakageReport,
    activation_lobe,
    free_space_kernel,
    jensen_bound_check,
    leakage_functional,
)

__version__ = "0.1.0"
