//! Dataset I/O, synthetic generators, the index container, experiment
//! runners and the recall-versus-cost benchmark loop.

mod bench;
mod container;
mod data;
mod experiments;
mod report;

pub use bench::{benchmark, BenchConfig, BenchFamily};
pub use container::{
    build_artifact, load_artifact, read_artifact, save_artifact, write_artifact, AqIndex, Artifact, BuildParams,
    Family, JlIndex, OpqIndex, PqIndex, QueryParams, ScoreAwareIndex, SketchIndex, ThresholdIndex, CONTAINER_MAGIC,
    CONTAINER_VERSION,
};
pub use data::{generate, load_vecs, read_vecs, save_vecs, write_vecs, Distribution, SyntheticSpec};
pub use experiments::{experiment_coincidence, experiment_instability};
pub use report::ExperimentReport;
