//! Pattern catalogs and the counts that sandwich Betti numbers.
//!
//! For degree `k` the basic pattern is the cross-polytope
//! `O_k = {±e_1, ..., ±e_{k+1}}`. Window sums count hot placements of
//! patterns with anchor in `Γ_n`:
//!
//! * `S` hot cross-polytopes, `D` those anchored on the boundary,
//! * `N` hot non-isometric copies of the cross-polytope graph,
//! * `L` hot certificates of non-minimal components.
//!
//! Their component-level counterparts `Š`, `Ň`, `Ľ` are read off the
//! excursion complex. [`verify_sandwich`] checks the inequalities tying all
//! of them to `β_k`.

mod catalog;
mod counts;
pub mod shape;
mod weights;

pub use catalog::{
    build_catalog, catalog_violations, geometric_edge_count, CatalogStore, Enumeration, Family, Pattern,
    PatternCatalog, CACHE_DIR_ENV, MAX_CATALOG_D, MAX_CATALOG_K,
};
pub use counts::{
    compute_counts, count_components, count_d, count_l, count_l_from_catalog, count_n, count_s, hot_sites,
    verify_sandwich, ApproximatorCounts, Catalogs, InequalityCheck, SandwichLedger,
};
pub use weights::{
    admits_p_pattern, connected_spanning_subgraphs, count_cliques, p_instances, translate_count,
    unique_clique_subgraphs, vertex_set_weight, SearchCaps,
};
