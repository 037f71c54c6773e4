use thiserror::Error;

/// Errors raised by the allocation engines and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NomaError {
    #[error("invalid scenario: `{field}` {reason}")]
    InvalidScenario { field: &'static str, reason: String },

    #[error("invalid configuration: `{field}` {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("user set is empty")]
    EmptyUserSet,

    #[error("user {user} out of range (num_users = {num_users})")]
    UserOutOfRange { user: usize, num_users: usize },

    #[error("subcarrier {subcarrier} out of range (num_subcarriers = {num_subcarriers})")]
    SubcarrierOutOfRange { subcarrier: usize, num_subcarriers: usize },

    #[error("user {0} appears more than once")]
    DuplicateUser(usize),

    #[error("user {0} is not present on this resource")]
    MissingUser(usize),

    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),

    #[error("used subcarrier count must be at least 1")]
    NoUsedSubcarriers,

    #[error("user {0} has zero channel gain")]
    ZeroGain(usize),

    #[error("power budget must be positive, got {0}")]
    NonPositiveBudget(f64),

    #[error("infeasible allocation: {0}")]
    Infeasible(String),

    #[error("{sensors} sensors but only {subcarriers} subcarriers")]
    TooManySensors { sensors: usize, subcarriers: usize },

    #[error("at least one sensor is required")]
    NoSensor,

    #[error("no group can accept broadband user {0} (all groups full)")]
    NoCapacity(usize),

    #[error("user {0} is a sensor; sensors are pinned to their group")]
    SensorCannotMove(usize),

    #[error("group {0} does not belong to this partition")]
    ForeignGroup(usize),

    #[error("user {user} is not a member of group {group}")]
    NotInGroup { user: usize, group: usize },

    #[error("oracle enumeration of {size} candidates exceeds budget {limit}")]
    BudgetExceeded { size: u128, limit: u128 },
}

pub type Result<T> = std::result::Result<T, NomaError>;
