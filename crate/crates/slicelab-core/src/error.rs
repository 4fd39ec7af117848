use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid SLA: lambda_ms must be > 0, got {0}")]
    InvalidLambda(f64),
    #[error("invalid SLA: phi_sla must be in (0, 1], got {0}")]
    InvalidPhi(f64),
    #[error("invalid action: {prbs} PRBs outside [1, {max}] (capacity {capacity}, {slices} slices)")]
    InvalidAction {
        prbs: u32,
        max: u32,
        capacity: u32,
        slices: usize,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),
    #[error("config io error: {0}")]
    ConfigIo(#[from] std::io::Error),
}
