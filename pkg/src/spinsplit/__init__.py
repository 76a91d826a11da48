"""Spin-polarizing interferometric beam splitter for free electrons.

An analytic four-mode Bragg model, three numerical Pauli-equation backends,
channel/spin analysis, and the experiment design calculator.
"""

__version__ = "0.1.0"

from .analytic import (
    EffectivePotential,
    StageUnitary,
    effective_potential_value,
    evolve_density,
    rabi_frequency_bi,
    rabi_frequency_mono,
    stage_unitary,
    total_evolution,
)
from .design import (
    DesignReport,
    LaserSpec,
    ToleranceBudget,
    full_design_report,
    intensity_from_xi,
    interaction_geometry,
    momentum_acceptance,
    no_flip_rabi,
    paper_design_report,
    pulse_energy_mj,
    scatter_probability_uncertainty,
)
from .fields import (
    BichromaticWave,
    Envelope,
    FieldStage,
    MonoStandingWave,
    envelope_value,
    magnetic_field,
    vector_potential,
)
from .observables import (
    ChannelReport,
    RabiFit,
    channel_report,
    fit_rabi,
    mode_channel_report,
    polarization_degree,
    spin_momentum_entanglement,
)
from .propagation import (
    ModeLatticeEngine,
    PacketSpec,
    PropagationConfig,
    Scenario,
    ScenarioResult,
    TimeSeries,
    run_scenario,
    stage_pulse_areas,
    step_effective,
    step_full_field,
    step_mode_lattice,
    with_backend,
)
from .scenario import load_scenario, parse_scenario_text
from .states import (
    BraggState,
    SpatialGrid,
    SpinorWavefunction,
    gaussian_packet,
    spin_expectations,
)

__all__ = [name for name in dir() if not name.startswith("_")]
