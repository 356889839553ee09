"""Redundancy matrices and statical indeterminacy distributions.

The package computes, for linear-elastic truss and 3D frame models, the
redundancy matrix R (an oblique projector whose diagonal distributes the
degree of statical indeterminacy over element deformation modes), by a
canonical inverse-based route and by a cheaper kernel-basis route, and
ships parametric model families plus a timing harness to compare the two.
"""
from .assembly import (AssembledSystem, BEAM3D_MODES, ElementFactors, TRUSS_MODES,
                       assemble, assemble_stiffness, beam3d_factors, dump_system,
                       element_factors, local_frame, truss_factors)
from .bench import (BenchGrid, CSV_FORMAT_VERSION, DEFAULT_MEMORY_CAP_BYTES, TimingRecord,
                    estimate_peak_bytes, run_series, time_task, write_csv,
                    write_records_csv)
from .generators import (FAMILIES, GENERATOR_FORMAT_VERSION, GeneratorSpec,
                         cylinder_alpha_range, gen_cylinder, gen_hypar, gen_mero,
                         generate, jitter_stiffness)
from .model import (BEAM3D, DOF_COMPONENTS, DofMap, Element, MaterialSection, ModelCounts,
                    Node, SCHEMA_VERSION, StructuralModel, Support, TRUSS,
                    ValidationReport, build_dof_map, counts, load_model, model_from_dict,
                    model_to_dict, rescale_length_units, save_model, validate_model)
from .redundancy import (CheckReport, CheckResult, InvariantViolation, KernelBasis,
                         KinematicallyIndeterminate, PrestrainResponse, RedundancyResult,
                         apply_prestrain, kernel_basis, rank_and_indeterminacy,
                         redundancy_canonical, redundancy_diag_canonical,
                         redundancy_diag_efficient, redundancy_efficient, run_checks,
                         self_stress)

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "BEAM3D", "BEAM3D_MODES", "BenchGrid", "CSV_FORMAT_VERSION",
    "CheckReport", "CheckResult", "DEFAULT_MEMORY_CAP_BYTES", "DOF_COMPONENTS", "DofMap",
    "Element", "ElementFactors", "FAMILIES", "GENERATOR_FORMAT_VERSION", "GeneratorSpec",
    "InvariantViolation", "KernelBasis", "KinematicallyIndeterminate", "MaterialSection",
    "ModelCounts", "Node", "PrestrainResponse", "RedundancyResult", "SCHEMA_VERSION",
    "StructuralModel", "Support", "TRUSS", "TRUSS_MODES", "TimingRecord",
    "ValidationReport", "apply_prestrain", "assemble", "assemble_stiffness",
    "beam3d_factors", "build_dof_map", "counts", "cylinder_alpha_range", "dump_system",
    "element_factors", "estimate_peak_bytes", "gen_cylinder", "gen_hypar", "gen_mero",
    "generate", "jitter_stiffness", "kernel_basis", "load_model", "local_frame",
    "model_from_dict", "model_to_dict", "rank_and_indeterminacy", "redundancy_canonical",
    "redundancy_diag_canonical", "redundancy_diag_efficient", "redundancy_efficient",
    "rescale_length_units", "run_checks", "run_series", "save_model", "self_stress",
    "time_task", "truss_factors", "validate_model", "write_csv", "write_records_csv",
    "__version__",
]
