use num_complex::Complex64;
use thiserror::Error;

use crate::connection::Point;
use crate::monodromy::Regime;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.  Nothing returns NaN silently:
/// a computation that would leave the domain of its formula raises one of
/// these instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole of Gamma/digamma at non-positive integer z = {0}")]
    PoleAtNonPositiveInteger(Complex64),

    #[error("series argument |x| = {0} is not inside the unit disk (or the term cap was reached)")]
    OutsideDisk(f64),

    #[error("argument {0} is not in the cut plane 0 < |x|, |arg x| < pi")]
    OutsideCutPlane(Complex64),

    #[error("outside the Fourier convergence domain: Im tau = {im_tau}, |Im(u/2w1)| = {im_shift}")]
    OutsideFourierDomain { im_tau: f64, im_shift: f64 },

    #[error("too close to a pole: {0}")]
    NearPole(String),

    #[error("singular input: {0} vanishes")]
    SingularInput(&'static str),

    #[error("could not sample a well-conditioned conjugator after {0} attempts")]
    DegenerateConjugator(usize),

    #[error("theta_inf = 0 is not allowed (use the equivalent value theta_inf = 2)")]
    ThetaInfinityZero,

    #[error("wrong regime: {operation} requires {expected}, found {found}")]
    WrongRegime {
        operation: &'static str,
        expected: &'static str,
        found: Regime,
    },

    #[error("non-generic data{}: {detail}", fmt_point(.point))]
    NonGenericData { point: Option<Point>, detail: String },

    #[error("singular denominator: {0} vanishes")]
    SingularDenominator(&'static str),

    #[error("integration constant r must be non-zero")]
    ZeroR,

    #[error("regime {regime} at {point} is not supported here (log/Taylor branches expose only leading forms)")]
    UnsupportedRegime { point: Point, regime: Regime },

    #[error("sigma = {0} is too close to an integer for the coefficient recursion")]
    NearIntegerSigma(Complex64),

    #[error("truncation order {order} outside 1..={cap}")]
    InvalidOrder { order: usize, cap: usize },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("local variable |t| = {modulus} outside the validity domain ({reason})")]
    OutsideValidityRadius { modulus: f64, reason: String },

    #[error("bridge expansion domain violated: {0}")]
    ExpansionDomainViolated(String),

    #[error("singular locus of PVI: {0} vanishes")]
    SingularLocus(&'static str),

    #[error("step size collapsed to {step:e} at x = {x}")]
    StepCollapse { x: Complex64, step: f64 },

    #[error("path blocked: {0}")]
    PathBlocked(String),

    #[error("fit ill-conditioned: {0}")]
    FitIllConditioned(String),
}

fn fmt_point(p: &Option<Point>) -> String {
    match p {
        Some(p) => format!(" at {p}"),
        None => String::new(),
    }
}
