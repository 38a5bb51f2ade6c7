"""Certification of quantum gates from the statistics of small networks.

The package simulates two network schemes in which distant parties probe
an uncharacterized operation applied to one side of shared entangled
pairs, evaluates the Bell-type functionals whose maximal violation pins
down states and measurements, checks the full set of protocol conditions
on a probability table, and extracts the implemented gate through local
SWAP isometries when the underlying realization is available.
"""

from .adversary import (
    ADVERSARY_KINDS,
    AdversarySpec,
    apply_adversary,
    conjugate,
    depolarize_sources,
    dilate,
    gauge_phase,
    load_adversary,
    perturb,
    save_adversary,
)
from .bell import (
    BellFunctional,
    BellTerm,
    SeesawResult,
    classical_bound,
    evaluate,
    functional_I,
    functional_K,
    k_sign_bits,
    seesaw_max,
)
from .certify import (
    CertificationReport,
    CheckRow,
    certify,
    load_report,
    save_report,
)
from .decomp import FTensor, delta_set, f_coeffs, f_tensor, reconstruct
from .extract import (
    LocalFrames,
    SiteFrame,
    branch_of,
    detect_branch_signs,
    extract_all,
    extracted_gate,
    extraction_fidelity,
    effective_elements,
    f_block_structure,
    grouped_isometry,
    mirror_frame,
    regularize,
    support_projector,
    swap_isometry,
    teleported_elements,
    verify_effective_measurements,
    verify_unitary_certificate,
)
from .network import (
    ALMOST_DI,
    DI,
    PERP,
    ProbabilityTable,
    Realization,
    ScenarioSpec,
    assemble_state,
    born_table,
    condition_probability,
    conditional_state,
    expectation,
    load_table,
    read_table,
    reference_realization,
    save_table,
    validate_realization,
    write_table,
)
from .primitives import (
    SettingSymbol,
    gate,
    gate_from_record,
    ghz_basis,
    ghz_bits,
    ghz_int,
    ghz_state,
    haar_unitary,
    pauli,
    phi_plus,
    ref_b_observable,
    ref_observable,
)
from .tensor import (
    Operator,
    StateVector,
    apply_raw,
    apply_to_sites,
    fidelity,
    kron,
    partial_trace,
    permute_sites,
    polar_unitary,
    reduced_density,
)

__version__ = "0.1.0"

__all__ = [
    "ADVERSARY_KINDS",
    "ALMOST_DI",
    "AdversarySpec",
    "BellFunctional",
    "BellTerm",
    "CertificationReport",
    "CheckRow",
    "DI",
    "FTensor",
    "LocalFrames",
    "Operator",
    "PERP",
    "ProbabilityTable",
    "Realization",
    "ScenarioSpec",
    "SeesawResult",
    "SettingSymbol",
    "SiteFrame",
    "StateVector",
    "apply_adversary",
    "apply_raw",
    "apply_to_sites",
    "assemble_state",
    "born_table",
    "branch_of",
    "certify",
    "classical_bound",
    "condition_probability",
    "conditional_state",
    "conjugate",
    "delta_set",
    "depolarize_sources",
    "detect_branch_signs",
    "dilate",
    "effective_elements",
    "evaluate",
    "expectation",
    "extract_all",
    "extracted_gate",
    "extraction_fidelity",
    "f_block_structure",
    "f_coeffs",
    "f_tensor",
    "fidelity",
    "functional_I",
    "functional_K",
    "gate",
    "gate_from_record",
    "gauge_phase",
    "ghz_basis",
    "ghz_bits",
    "ghz_int",
    "ghz_state",
    "grouped_isometry",
    "haar_unitary",
    "k_sign_bits",
    "kron",
    "load_adversary",
    "load_report",
    "load_table",
    "mirror_frame",
    "partial_trace",
    "pauli",
    "permute_sites",
    "perturb",
    "phi_plus",
    "polar_unitary",
    "read_table",
    "reconstruct",
    "reduced_density",
    "ref_b_observable",
    "ref_observable",
    "reference_realization",
    "regularize",
    "save_adversary",
    "save_report",
    "save_table",
    "seesaw_max",
    "support_projector",
    "swap_isometry",
    "teleported_elements",
    "validate_realization",
    "verify_effective_measurements",
    "verify_unitary_certificate",
    "write_table",
]
