use choquard_core::Error;

/// Exit code 1: bad input or flags. Exit code 2: the solver did not deliver.
pub const INPUT: u8 = 1;
pub const SOLVER: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: INPUT,
            message: message.into(),
        }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Self {
            code: SOLVER,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } | Error::NoNehariPoint | Error::QuadratureBlowUp | Error::EmptyCalibration => {
                SOLVER
            }
            _ => INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
