use thiserror::Error;

use crate::network::LinkId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("network has no links")]
    NoLinks,
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("link `{link}` references unknown node `{node}`")]
    DanglingNode { link: String, node: String },
    #[error("link `{link}`: {attr} must be positive and finite, got {value}")]
    NonPositive {
        link: String,
        attr: &'static str,
        value: f64,
    },
    #[error("node `{0}` has non-finite coordinates")]
    NonFiniteCoordinate(String),
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("observations refer to different links ({0} vs {1})")]
    MismatchedLinks(LinkId, LinkId),
    #[error("no route from link {from} to link {to}")]
    Unreachable { from: LinkId, to: LinkId },
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("population record {line}: {reason}")]
    Population { line: usize, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("plan has no score")]
    UnscoredPlan,
    #[error("marginal utility of money must be positive")]
    ZeroMoneyUtility,
    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },
    #[error("population mismatch: {0}")]
    PopulationMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}
