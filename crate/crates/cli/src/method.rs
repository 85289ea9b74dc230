use std::fmt;
use std::str::FromStr;

use multiplex_nmf::Method;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// What `--method` asks for: a single-layer factorization, the consensus
/// pipeline, or the merged-layer baseline built on a base factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodTag {
    Single(Method),
    Collective(Method),
    Merged(Method),
}

impl MethodTag {
    pub fn base(self) -> Method {
        match self {
            MethodTag::Single(m) | MethodTag::Collective(m) | MethodTag::Merged(m) => m,
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodTag::Single(m) => write!(f, "{m}"),
            MethodTag::Collective(m) => write!(f, "c{m}"),
            MethodTag::Merged(m) => write!(f, "merged-{m}"),
        }
    }
}

impl FromStr for MethodTag {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || CliError::InvalidArgument(format!("unknown method `{s}`"));
        if let Some(base) = s.strip_prefix("merged-") {
            return base.parse().map(MethodTag::Merged).map_err(|_| unknown());
        }
        if let Ok(m) = s.parse() {
            return Ok(MethodTag::Single(m));
        }
        s.strip_prefix('c')
            .and_then(|base| base.parse().ok())
            .map(MethodTag::Collective)
            .ok_or_else(unknown)
    }
}

impl TryFrom<String> for MethodTag {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MethodTag> for String {
    fn from(tag: MethodTag) -> Self {
        tag.to_string()
    }
}
