use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// One violated configuration constraint, addressed by its key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigViolation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration ({} violation(s)): {}", .0.len(), join(.0))]
    Config(Vec<ConfigViolation>),
    #[error("malformed network: {0}")]
    Network(String),
    #[error("invalid signal plan: {0}")]
    Signal(String),
    #[error("statistics: {0}")]
    Stats(String),
}

fn join(v: &[ConfigViolation]) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for (i, c) in v.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        let _ = write!(s, "{c}");
    }
    s
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
