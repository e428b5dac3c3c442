use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Hurst index {0} outside the supported range [0.5, 1)")]
    HurstOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel evaluated at r = {r} >= t = {t}")]
    KernelDomain { t: f64, r: f64 },

    #[error("time {t} lies outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("time {0} is not a point of the simulation grid")]
    OffGrid(f64),

    #[error("empty grid")]
    EmptyGrid,

    #[error("warm-up window is empty but H = {0} > 1/2 needs history")]
    EmptyWarmup(f64),

    #[error("segment [{start}, {end}) spans {cells} fine cell(s); at least 2 are required")]
    DegenerateSegment { start: f64, end: f64, cells: usize },

    #[error("integrand {label} is not measurable at the start of segment [{start}, {end})")]
    NotSegmentPredictable { label: String, start: f64, end: f64 },

    #[error("unknown integrand spec '{0}'; expected det:const:C, det:poly:a0,a1,.., bm, bm2, fbm:H, wh:H, fbm:self or pp:<inner>:<segments>")]
    UnknownIntegrand(String),

    #[error("{0}")]
    NotQualifying(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
