use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable `{name}` has invalid bounds [{lower}, {upper}]")]
    BadBounds { name: String, lower: f64, upper: f64 },
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("row `{tag}` references unknown variable {var}")]
    UnknownVariable { tag: String, var: usize },
    #[error("row `{tag}` lists variable {var} twice")]
    DuplicateTerm { tag: String, var: usize },
    #[error("row `{tag}` has a non-finite coefficient or rhs")]
    NonFinite { tag: String },
    #[error("McCormick envelope for `{name}` needs finite bounds, got [{lower}, {upper}]")]
    UnboundedFactor { name: String, lower: f64, upper: f64 },
    #[error("`{name}` is not a binary variable")]
    NotBinary { name: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("LP numerical error: {detail} (max residual {residual:.3e}, pivots {pivots})")]
    Numerical {
        detail: String,
        residual: f64,
        pivots: usize,
    },
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("name collision after sanitizing: `{first}` and `{second}` both map to `{token}`")]
    NameCollision {
        first: String,
        second: String,
        token: String,
    },
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
}
