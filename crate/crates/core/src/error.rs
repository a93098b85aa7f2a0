use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MeasureError {
    #[error("level set modulus must be positive")]
    ZeroModulus,
    #[error("level set at depth {depth} is not strictly increasing at {at}")]
    UnsortedMembers { depth: usize, at: u64 },
    #[error("level {level} out of range for modulus {modulus}")]
    LevelOutOfRange { level: u64, modulus: u64 },
    #[error("level sets live on different towers (depth {left} vs {right})")]
    DepthMismatch { left: usize, right: usize },
    #[error("cannot lift depth {from_depth} (modulus {from_modulus}) to depth {to_depth} (modulus {to_modulus})")]
    IncompatibleLift {
        from_depth: usize,
        from_modulus: u64,
        to_depth: usize,
        to_modulus: u64,
    },
    #[error("partition cells overlap at level {level}")]
    OverlappingCells { level: u64 },
    #[error("level {level} is not covered")]
    CoverageViolation { level: u64 },
    #[error("cannot parse rational {0:?}")]
    ParseRational(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OdometerError {
    #[error("cannot parse supernatural number {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("supernatural number {0} has only finitely many prime factors")]
    FinitelyManyFactors(String),
    #[error("moduli must start at 1 and increase by integer quotients greater than 2 (stage {stage})")]
    BadModuli { stage: usize },
    #[error("depth {depth} exceeds the constructed depth {max}")]
    DepthOverflow { depth: usize, max: usize },
    #[error("index {index} out of range for modulus {modulus}")]
    IndexOutOfRange { index: u64, modulus: u64 },
    #[error("digit vector has wrong length or digit out of range")]
    BadDigits,
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("stage {stage}: only {available} rung indices available, need at least p = {prime}")]
    TooFewRungs {
        stage: usize,
        available: u64,
        prime: u64,
    },
    #[error("stage {stage}: factor stream exhausted before an admissible modulus was found")]
    StreamExhausted { stage: usize },
    #[error("stage {stage}: modulus would exceed the depth cap {cap} (last candidate {candidate}); failing: {failing:?}")]
    DepthCap {
        stage: usize,
        cap: u64,
        candidate: u64,
        failing: Vec<String>,
    },
    #[error("stage {stage}: strict inequalities fixed by earlier stages fail: {failing:?}")]
    AnalyticFailure { stage: usize, failing: Vec<String> },
    #[error("cannot parse schedule mode {0:?}")]
    ParseMode(String),
    #[error(transparent)]
    Ladder(#[from] LadderError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LadderError {
    #[error("stage ({n},{m}) requires stage ({need_n},{need_m}) to be built first")]
    MissingStage {
        n: usize,
        m: usize,
        need_n: usize,
        need_m: usize,
    },
    #[error("rung count a_{n} = {a} out of range (max {max})")]
    RungCountOutOfRange { n: usize, a: u64, max: u64 },
    #[error("stage ({n},{n}): W has {levels} levels, fewer than p + 1 = {needed}")]
    TooFewLevels { n: usize, levels: u64, needed: u64 },
    #[error("malformed stage ({n},{m}): {reason}")]
    Malformed { n: usize, m: usize, reason: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Odometer(#[from] OdometerError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrbitError {
    #[error("pieces of S overlap at depth-{depth} level {level}")]
    Overlap { depth: usize, level: u64 },
    #[error("S is not injective: levels {first} and {second} map to {image}")]
    NotInjective { first: u64, second: u64, image: u64 },
    #[error("resolved displacement {k} at level {level} exceeds the bound {bound} on K'_{n}")]
    CrudeBoundViolated { n: usize, level: u64, k: i64, bound: u64 },
    #[error(transparent)]
    Ladder(#[from] LadderError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrowthError {
    #[error("enumeration horizon exceeded: {0}")]
    Horizon(String),
    #[error("position {pos} outside 1..={n}")]
    BadPosition { pos: usize, n: usize },
    #[error("cannot parse group element or group spec {0:?}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("artifact io: {0}")]
    Io(#[from] std::io::Error),
    #[error("artifact json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("artifact was written by version {found}, this is {expected}")]
    VersionMismatch { found: String, expected: String },
    #[error("artifact is corrupt: {0}")]
    Corrupt(String),
}

/// Any failure of a full run, classified by the CLI into exit codes.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Odometer(#[from] OdometerError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}
