//! Graph models: the periodic day graph behind the mode-3 transform, the
//! circulant temporal kernel Laplacian and the directed spatial graph with
//! its diffusion kernels.

pub mod spatial;
pub mod temporal;

pub use spatial::{
    dgr_penalty, diffusion_operator, gaussian_adjacency, graph_smooth_closed_form,
    smooth_with_laplacian, DegreeMode, DiffusionKernel, SpatialGraph, SpatialPenalty,
};
pub use temporal::{
    build_temporal_adjacency, gtcr_penalty, graph_laplacian, tgft_transform,
    TemporalKernelLaplacian, TemporalPeriodicGraph, TemporalWeights,
};
