use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid channel: {0}")]
    Channel(String),

    #[error("alphabet mismatch in {context}: expected {expected} symbols, found {found}")]
    AlphabetMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid distortion matrix: {0}")]
    Distortion(String),

    #[error("invalid task model: {0}")]
    TaskModel(String),

    #[error("lift hypothesis violated: reproduction letter {letter} maps to task output {task_output}, which no input reaches")]
    LiftHypothesis { letter: usize, task_output: usize },

    #[error("invalid solver config: {0}")]
    Config(String),

    #[error("Blahut-Arimoto did not converge at slope {slope} after {iterations} iterations (residual {residual:e} bits)")]
    NonConvergence {
        slope: f64,
        iterations: usize,
        residual: f64,
        rate: f64,
        distortion: f64,
    },

    #[error("sweep failed at slopes {slopes:?}: {first}")]
    SweepFailed { slopes: Vec<f64>, first: Box<Error> },

    #[error("distortion {target} is below the minimum achievable distortion {d_min}")]
    Infeasible { target: f64, d_min: f64 },

    #[error("instance too large for brute force: {0}")]
    TooLarge(String),

    #[error("invalid coding approach: {0}")]
    Approach(String),

    #[error("missing distortion matrix for target {0:?}")]
    MissingDistortion(String),

    #[error("invalid instance spec: {0}")]
    InstanceSpec(String),

    #[error("unknown theorem id {id:?}; valid ids: {valid}")]
    UnknownTheorem { id: String, valid: String },

    #[error("invalid feature set: {0}")]
    FeatureSet(String),

    #[error("class {class} has zero intra-cluster distortion")]
    DegenerateCluster { class: usize },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("class count mismatch: {first} has {first_classes} classes, {second} has {second_classes}")]
    ClassCountMismatch {
        first: String,
        first_classes: usize,
        second: String,
        second_classes: usize,
    },

    #[error("Lloyd iteration did not converge after {0} iterations")]
    LloydNonConvergence(usize),

    #[error("invalid toy quantizer: {0}")]
    ToyQuantizer(String),

    #[error("invalid curve: {0}")]
    Curve(String),

    #[error("no overlap between curves")]
    NoOverlap,

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
