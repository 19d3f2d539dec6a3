pub mod assp;
pub mod cyclic;
pub mod decomposer;
pub mod detailcomplete;
pub mod imagecore;
pub mod mlpnet;
pub mod strokeengine;
