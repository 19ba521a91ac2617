//! Error type shared by every module.

use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not in o3 (antisymmetry defect {0:e})")]
    NotInO3(f64),
    #[error("degenerate frame (|det| = {0:e})")]
    DegenerateFrame(f64),
    #[error("singular matrix (|det| = {0:e})")]
    Singular(f64),
    #[error("jet pole (|value| = {0:e})")]
    JetPole(f64),
    #[error("jet branch point (|value| = {0:e})")]
    JetBranchPoint(f64),
    #[error("insufficient jet order for a derivative in variable {0}")]
    InsufficientOrder(usize),
    #[error("multi-index outside caps")]
    OutOfCaps,
    #[error("variable {0} has cap 0 and cannot be seeded")]
    ZeroCap(usize),
    #[error("mismatched form spaces")]
    SpaceMismatch,
    #[error("degenerate metric")]
    DegenerateMetric,
    #[error("point ({0}, {1}) outside the domain of {2}")]
    OutsideDomain(f64, f64, String),
    #[error("not isometric (residual {0:e})")]
    NotIsometric(f64),
    #[error("developable seed excluded (K = {0:e})")]
    Developable(f64),
    #[error("m = 0 excluded")]
    MZero,
    #[error("regularity violated: {0}")]
    Regularity(String),
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
    #[error("c4 pole (denominator {0:e})")]
    C4Pole(f64),
    #[error("F-system singular (det = {0})")]
    FSystemSingular(Complex64),
    #[error("interpolation conditioning failure")]
    Interpolation,
    #[error("degenerate 2-form")]
    Degenerate2Form,
    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
