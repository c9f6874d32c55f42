"""Certified thermodynamics of prefix-free program ensembles.

The package turns a concrete self-delimiting machine into numbers you
can trust: partial partition sums with outward-rounded dyadic interval
arithmetic, dovetailed enumeration of halting programs, program-size
complexity with validated witnesses, and exact big-integer ensemble
counts compared against the Boltzmann distribution.
"""

from .complexity import (
    ComplexityResult,
    ProbabilityBound,
    algorithmic_probability,
    compression_profile,
    program_size_complexity,
)
from .ensemble import (
    ChannelReport,
    DeviationReport,
    EnsembleTable,
    additivity_residual,
    build_theta,
    canonical_distribution,
    channel_law,
    channel_simulate,
    first_codeword_distribution,
    micro_canonical_deviation,
    micro_entropy_temperature,
    solve_energy_temperature,
)
from .enumeration import HaltRecord, dovetail, kraft_sum, read_checkpoint, verify_prefix_free
from .errors import ConfigError, NumericDomainError, ResourceLimitError, UnsolvableError
from .machine import (
    BUILTIN_NAMES,
    Machine,
    RunResult,
    StepMachine,
    TableMachine,
    build_machine,
    builtin,
    load_machine,
    machine_hash,
)
from .numeric import DEFAULT_PRECISION, Dyadic, DyadicInterval
from .thermo import (
    EntropyBound,
    SeriesState,
    ThermoRow,
    divergence_probe,
    shannon_partial,
    solve_temperature,
    sweep,
    tail_bound,
    thermo_row,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES",
    "ChannelReport",
    "ComplexityResult",
    "ConfigError",
    "DEFAULT_PRECISION",
    "DeviationReport",
    "Dyadic",
    "DyadicInterval",
    "EnsembleTable",
    "EntropyBound",
    "HaltRecord",
    "Machine",
    "NumericDomainError",
    "ProbabilityBound",
    "ResourceLimitError",
    "RunResult",
    "SeriesState",
    "StepMachine",
    "TableMachine",
    "ThermoRow",
    "UnsolvableError",
    "additivity_residual",
    "algorithmic_probability",
    "build_machine",
    "build_theta",
    "builtin",
    "canonical_distribution",
    "channel_law",
    "channel_simulate",
    "compression_profile",
    "divergence_probe",
    "dovetail",
    "first_codeword_distribution",
    "kraft_sum",
    "load_machine",
    "machine_hash",
    "micro_canonical_deviation",
    "micro_entropy_temperature",
    "program_size_complexity",
    "read_checkpoint",
    "shannon_partial",
    "solve_energy_temperature",
    "solve_temperature",
    "sweep",
    "tail_bound",
    "thermo_row",
    "verify_prefix_free",
]
