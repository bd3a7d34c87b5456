use std::fmt;
use std::path::PathBuf;

/// A named mathematical hypothesis that a run or experiment depends on.
///
/// Constants that only exist under a hypothesis carry the hypothesis that
/// failed instead of a sentinel number, so every rejection can be traced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// p > 1 + 2/N, equivalently gamma > 0.
    Supercritical,
    /// N >= 3, required for the singular equilibrium.
    DimensionAtLeastThree,
    /// p > N/(N-2), required for the singular equilibrium to be nondegenerate.
    EquilibriumExponent,
    /// lambda below the K-functional decay bound lambda_max.
    LambdaBelowMax,
    /// p above the threshold of the weighted-norm bound (N/(N-2) for N=3, 1+4/N for N>=4).
    NormBoundExponent,
    /// 0 <= u0 <= lambda * u_inf pointwise.
    InitialBelowBarrier,
    /// The initial entropy production is finite on the grid.
    FiniteProduction,
    /// E(u0) < 0, needed by the negative-entropy blow-up test.
    NegativeInitialEntropy,
    /// t_max <= 1 for the frame comparison.
    CrossFrameHorizon,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            Hypothesis::Supercritical => "supercritical exponent p > 1 + 2/N (gamma > 0)",
            Hypothesis::DimensionAtLeastThree => "dimension N >= 3",
            Hypothesis::EquilibriumExponent => "exponent p > N/(N-2)",
            Hypothesis::LambdaBelowMax => "barrier fraction lambda < lambda_max (K-functional decay bound)",
            Hypothesis::NormBoundExponent => "exponent p > p_tilde (weighted norm bound)",
            Hypothesis::InitialBelowBarrier => "initial data u0 <= lambda * u_inf",
            Hypothesis::FiniteProduction => "finite initial entropy production I(u0)",
            Hypothesis::NegativeInitialEntropy => "negative initial entropy E(u0) < 0",
            Hypothesis::CrossFrameHorizon => "cross-frame horizon t_max <= 1",
        };
        f.write_str(text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("hypothesis violated: {hypothesis}: {detail}")]
    Hypothesis { hypothesis: Hypothesis, detail: String },

    #[error("grid: {0}")]
    Grid(String),

    #[error("initial data: {0}")]
    InitialData(String),

    #[error("time step: {0}")]
    Step(String),

    #[error("frame map: {0}")]
    Map(String),

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn hypothesis(hypothesis: Hypothesis, detail: impl Into<String>) -> Self {
        Error::Hypothesis { hypothesis, detail: detail.into() }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
