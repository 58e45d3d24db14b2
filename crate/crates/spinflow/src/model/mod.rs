//! Physical model construction: sites, chains, matching fields, effective
//! couplings.

pub mod chain;
pub mod coupling;
pub mod matching;
pub mod site;

pub use chain::{
    build_chain_hamiltonian, build_pair_hamiltonian, chain_layout, constants, dressed_basis_state,
    dressed_energies, dressed_transform, pair_dressed_basis_state, pair_dressed_transform,
    pair_layout, BondKind, ChainSpec, Topology, TreeEdge,
};
pub use coupling::{
    analytic_block, cross_matrix_element, effective_coupling_chain, effective_coupling_pair,
    effective_pair_hamiltonian, extracted_coupling, pair_cross_element, reduced_block,
};
pub use matching::{
    detuning_of, matching_field, matching_field_bond, refine_pair_matching, Branch,
    MatchingCondition,
};
pub use site::{HyperfineFrame, SiteSpec};
