//! Architecture description, the residual network itself, and static analyses.

mod analysis;
mod network;
mod spec;

pub use analysis::{
    count_parameters, enumerate_paths, path_stats, path_stats_for_units, perturbation_impact,
    receptive_field, receptive_field_for_depth, PathStats, MAX_ENUMERATED_UNITS,
};
pub use network::{
    Backward, ForwardCache, GradEntry, Gradients, NamedTensor, Network, ParamKind, ParamMut,
    ResidualUnit,
};
pub use spec::{parse_arch, ArchSpec, Container, ReluPosition};
