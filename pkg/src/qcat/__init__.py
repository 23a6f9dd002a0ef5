"""Noisy quantum cat map on the torus.

Paired classical/quantum propagation of an initial Gaussian under a
hyperbolic torus map with phase-space diffusion, quantum-classical distance
measures, and scaling-collapse analysis of the measures against the
composite parameter zeta = hbar^2 Lambda / D.
"""

from .phase_space import (
    ChordField,
    DensityMatrix,
    SpectralDensity,
    chord_transform,
    full_chord_transform,
    inverse_chord,
    make_coherent_classical,
    make_coherent_quantum,
    real_space_sample,
    translation_operator,
)
from .dynamics import (
    DEFAULT_MAP,
    CatMapSpec,
    NoiseSpec,
    QuantizationError,
    RunConfig,
    classical_diffusion,
    classical_step,
    decoherence_step,
    default_k_max,
    evolve,
    quantized_unitary,
    quantum_step,
)
from .measures import (
    ExtremaResult,
    RunTrace,
    chi_squared,
    k1_distance,
    k_epsilon,
    measure_lambda2,
    overlap,
    track_extrema,
)
from .sweep import (
    AnalysisError,
    ChiExpansionFit,
    ExponentTriple,
    SweepPoint,
    TransitionFit,
    collapse_spread,
    composite_parameter,
    default_grid,
    fit_chi_expansion,
    fit_transition,
    run_sweep,
    search_exponents,
)

__version__ = "0.1.0"
