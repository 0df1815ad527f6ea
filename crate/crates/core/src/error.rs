use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("finite search interval required")]
    UnboundedSearch,

    #[error("order undecided at tolerance {tol}")]
    OrderUndecided { tol: f64 },

    #[error("bound exhausted: {0}")]
    BoundExhausted(String),

    #[error("measure not quasi-invariant for {map} at tolerance (max deviation {deviation:e})")]
    NotQuasiInvariant { map: String, deviation: f64 },

    #[error("translation number undefined off kernel of A (A = {scaling})")]
    OffKernel { scaling: String },

    #[error("map has a fixed point at {at}")]
    HasFixedPoint { at: String },

    #[error("lemma hypothesis not satisfied: {0}")]
    LemmaHypothesis(String),

    #[error("orbit leaves the domain where the Lipschitz constant was certified: {0}")]
    UncertifiedOrbit(String),

    #[error("lift identity F(x+1) = F(x)+1 fails at x = {witness}")]
    NotALift { witness: String },

    #[error("base point has nontrivial stabilizer: word {word} fixes it")]
    NontrivialStabilizer { word: String },

    #[error("inserted gaps overlap near {0}")]
    GapsOverlap(String),

    #[error("rejection budget exhausted after {0} attempts")]
    RejectionBudget(usize),

    #[error("hypothesis violated: {word} has fixed points {fixed_points:?}")]
    HypothesisViolated { word: String, fixed_points: Vec<String> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
