"""Domain engineering for quasi-phase-matched down-conversion crystals.

Design poling patterns whose phase-matching function approximates a
Gaussian, evaluate the resulting joint spectra, and score designs by
heralded-photon spectral purity.
"""

from .errors import ConfigError, PhaseMatchedProcessError, QpmError, ValidityWindowError
from .dispersion import (
    C,
    GvmReport,
    KtpSellmeierModel,
    LinearSyntheticModel,
    ProcessSpec,
    SellmeierAxis,
    coherence_length,
    delta_k,
    delta_k0,
    gvm_report,
    inverse_group_velocity,
    load_ktp_model,
    wavenumber,
)
from .grating import (
    GaussianPmf,
    Grating,
    PmfGrid,
    TargetAmplitude,
    amplitude_at_domain_ends,
    export_poling,
    field_amplitude,
    gaussian_erf_target,
    gaussian_target_pmf,
    import_poling,
    periodic_reference_peak,
    pmf,
    poling_content_hash,
    symmetrize,
    tabulated_target,
    target_eval,
)
from .algorithms import (
    ALGORITHM_IDS,
    AnnealConfig,
    DesignReport,
    anneal_widths,
    design,
    design_domain_by_domain,
    design_for_length_sweep,
    design_periodic,
    design_sub_coherence,
    design_tambasco_blocks,
    pmf_on_grid,
)
from .spectrum import (
    JointSpectrum,
    PumpEnvelope,
    SchmidtResult,
    build_jsa,
    optimize_pump_bandwidth,
    pmf_width,
    purity_from_singular_values,
    purity_vs_length,
    schmidt,
)

__version__ = "0.1.0"
