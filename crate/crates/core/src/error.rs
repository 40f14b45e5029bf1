use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by ingestion, estimation and planning.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    EmptyInput,
    /// A subject/observer cell is missing or does not hold replicates `1..=c`.
    UnbalancedDesign {
        subject: String,
        observer: String,
        detail: String,
    },
    DegenerateDesign {
        a: usize,
        b: usize,
        c: usize,
    },
    DuplicateCell {
        subject: String,
        observer: String,
        replicate: u32,
    },
    NonFiniteValue {
        subject: String,
        observer: String,
        replicate: u32,
    },
    DuplicateLabel {
        axis: &'static str,
        label: String,
    },
    /// Value or label count does not match the design.
    ShapeMismatch {
        expected: usize,
        found: usize,
    },
    /// The two grids of a paired study differ in design or labels.
    MismatchedDesigns(String),
    Domain(&'static str),
    NotAchievable {
        max: usize,
        width_at_max: f64,
    },
    DegenerateResample {
        attempts: u64,
    },
}

impl Error {
    /// Stable identifier, used by the CLI on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::UnbalancedDesign { .. } => "UnbalancedDesign",
            Error::DegenerateDesign { .. } => "DegenerateDesign",
            Error::DuplicateCell { .. } => "DuplicateCell",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::DuplicateLabel { .. } => "DuplicateLabel",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::MismatchedDesigns(_) => "MismatchedDesigns",
            Error::Domain(_) => "DomainError",
            Error::NotAchievable { .. } => "NotAchievable",
            Error::DegenerateResample { .. } => "DegenerateResample",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput => write!(f, "no measurements supplied"),
            Error::UnbalancedDesign {
                subject,
                observer,
                detail,
            } => write!(
                f,
                "unbalanced design at subject {subject:?}, observer {observer:?}: {detail}"
            ),
            Error::DegenerateDesign { a, b, c } => write!(
                f,
                "design needs more than one subject, observer and replicate (got a={a}, b={b}, c={c})"
            ),
            Error::DuplicateCell {
                subject,
                observer,
                replicate,
            } => write!(
                f,
                "duplicate measurement for subject {subject:?}, observer {observer:?}, replicate {replicate}"
            ),
            Error::NonFiniteValue {
                subject,
                observer,
                replicate,
            } => write!(
                f,
                "non-finite measurement for subject {subject:?}, observer {observer:?}, replicate {replicate}"
            ),
            Error::DuplicateLabel { axis, label } => write!(f, "duplicate {axis} label {label:?}"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            Error::MismatchedDesigns(msg) => write!(f, "paired grids do not match: {msg}"),
            Error::Domain(msg) => write!(f, "argument out of domain: {msg}"),
            Error::NotAchievable { max, width_at_max } => write!(
                f,
                "target width not reached within the search cap {max} (width there is {width_at_max})"
            ),
            Error::DegenerateResample { attempts } => write!(
                f,
                "too many degenerate bootstrap resamples ({attempts} draws)"
            ),
        }
    }
}

impl core::error::Error for Error {}
