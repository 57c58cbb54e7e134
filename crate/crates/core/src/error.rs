use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative argument {value} passed to {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("vacuum state encountered ({0})")]
    Vacuum(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("constraint is infeasible: {0}")]
    Infeasible(String),

    #[error("time step {k} violates the CFL bound {bound}")]
    Cfl { k: f64, bound: f64 },

    #[error("mesh collapse: cell width {0} is not positive")]
    MeshCollapse(f64),

    #[error("state ({rho}, {v}) left the invariant domain")]
    DomainBreach { rho: f64, v: f64 },

    #[error("invalid configuration at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
