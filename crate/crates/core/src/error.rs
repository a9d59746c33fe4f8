//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} does not match data length {len}")]
    ShapeData { shape: Vec<usize>, len: usize },
    #[error("shape {shape:?} contains a zero dimension")]
    ZeroDim { shape: Vec<usize> },
    #[error("non-finite value {value} in tensor input")]
    NonFinite { value: f32 },
    #[error("{op}: shapes {left:?} and {right:?} do not conform")]
    ShapeMismatch { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("{op}: expected {expected}, got shape {got:?}")]
    BadShape { op: &'static str, expected: String, got: Vec<usize> },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("token id {id} out of vocabulary (size {vocab})")]
    TokenOutOfVocab { id: usize, vocab: usize },
    #[error("trainable parameter {name:?} has no gradient")]
    MissingGrad { name: String },
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid config field {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("partition layer counts sum to {got}, model has {expected} layers")]
    BadPartition { got: usize, expected: usize },
    #[error("slice {role} given {kind} input, expected {expected}")]
    WrongInput { role: &'static str, kind: &'static str, expected: &'static str },
    #[error("lora target {target:?} not present in slice")]
    LoraTargetMissing { target: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("protocol violation: expected {expected}, received {got}")]
    UnexpectedMessage { expected: &'static str, got: String },
    #[error("payload shape {got:?} does not match expected {expected:?}")]
    PayloadShape { expected: Vec<usize>, got: Vec<usize> },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Defense(#[from] DefenseError),
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("bad frame magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported wire version {0}")]
    BadVersion(u8),
    #[error("unknown message type byte {0}")]
    BadMsgType(u8),
    #[error("frame truncated: needed {needed} bytes, had {had}")]
    Truncated { needed: usize, had: usize },
    #[error("payload length {got} does not match shape {shape:?}")]
    PayloadLength { shape: Vec<u32>, got: usize },
    #[error("handshake refused: config digest mismatch (ours {ours}, theirs {theirs})")]
    DigestMismatch { ours: String, theirs: String },
    #[error("peer disconnected after seq {last_seq}")]
    Disconnected { last_seq: u64 },
    #[error("sequence number went backwards: {got} after {prev}")]
    SeqRegression { prev: u64, got: u64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DefenseError {
    #[error("{kind} requires strength > 0, got {got}")]
    NonPositiveStrength { kind: &'static str, got: f64 },
    #[error("{kind} cannot be mounted at {position} (allowed: {allowed})")]
    BadPosition { kind: &'static str, position: &'static str, allowed: &'static str },
    #[error("{kind} cannot run in the {phase} phase ({reason})")]
    BadPhase { kind: &'static str, phase: &'static str, reason: &'static str },
    #[error("sparsification rate must be in [0, 100), got {0}")]
    BadSparsity(f64),
    #[error("cluster count must be at least 2, got {0}")]
    BadClusterCount(usize),
    #[error("regularizer strength must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("attack optimizer diverged (non-finite loss at epoch {epoch})")]
    Diverged { epoch: usize },
    #[error("auxiliary corpus is empty")]
    EmptyAux,
    #[error("no gradient transcripts available for a training-phase attack")]
    NoGradients,
    #[error("{kind} requires {requirement}")]
    Unsupported { kind: &'static str, requirement: &'static str },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("prediction and truth lengths differ: {preds} vs {truth}")]
    LengthMismatch { preds: usize, truth: usize },
    #[error("empty evaluation set")]
    Empty,
    #[error("{name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("attack-type weights sum to {0}, expected 1.0")]
    BadWeights(f64),
    #[error("records are not comparable: {0}")]
    Incomparable(String),
    #[error("metric {0:?} is defined for external-reference tasks and is not implemented")]
    Unimplemented(String),
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config: {0}")]
    Config(String),
    #[error("corpus line {line}: {reason}")]
    Corpus { line: usize, reason: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Defense(#[from] DefenseError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
