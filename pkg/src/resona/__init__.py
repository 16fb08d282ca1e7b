"""Capacitance-matrix numerics for systems of high-contrast subwavelength
acoustic resonators: boundary-element capacitance solvers, resonance
asymptotics, lattice band structure, chain topology, dilute effective media
and cochlea-like filter banks.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    AIR_IN_WATER,
    Lattice,
    MaterialParams,
    PlaneMesh,
    SurfaceMesh,
    cubic_lattice,
    honeycomb_lattice,
    make_dimer,
    make_disk_polygon,
    make_graded_array,
    make_honeycomb_pair,
    make_sphere_mesh,
    read_tri,
    write_tri,
)
from .resonators import (  # noqa: F401
    CapacitanceMatrix,
    ResonanceSet,
    capacitance_matrix,
    contrast_params,
    dimer_point_scatterer,
    dipole_weight,
    modal_coefficients,
    refine_characteristic_value,
    refine_resonance,
    resonances_leading_order,
    scattering_coefficient,
    solve_equilibrium_densities,
)
from .twosphere import (  # noqa: F401
    bispherical_frame,
    blowup_prediction,
    capacitance_asymptotics,
    capacitance_series,
    close_resonances,
)
from .bands import (  # noqa: F401
    band_omega1,
    band_sweep,
    brillouin_path,
    dirac_fit,
    dispersion_check_above_gap,
    homogenized_tensor,
    honeycomb_capacitance,
    quasi_capacitance,
)
from .ssh import (  # noqa: F401
    ChainGeometry,
    band_inversion,
    chain_bands,
    chain_capacitance,
    dilute_chain_asymptotics,
    winding_and_zak,
)
from .effective import (  # noqa: F401
    DiluteMediumSpec,
    DimerMediumSpec,
    dimer_constants,
    double_negative_window,
    effective_coefficient,
    uniform_density,
)
from .cochlea import (  # noqa: F401
    decompose,
    design_graded_array,
    load_wav,
    make_kernels,
    pressure_field,
)
