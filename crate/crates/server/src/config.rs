//! Service configuration from the environment.

use anyhow::{bail, Context};
use std::net::SocketAddr;
use std::time::Duration;
use wealth_target::numerics::{QuadratureScheme, QuadratureSpec};

pub const ENV_BIND: &str = "WEALTH_TARGET_BIND";
pub const ENV_SESSION_TTL: &str = "WEALTH_TARGET_SESSION_TTL_SECS";
pub const ENV_QUADRATURE_SCHEME: &str = "WEALTH_TARGET_QUADRATURE_SCHEME";
pub const ENV_QUADRATURE_NODES: &str = "WEALTH_TARGET_QUADRATURE_NODES";
pub const ENV_QUADRATURE_RADIUS: &str = "WEALTH_TARGET_QUADRATURE_RADIUS";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub session_ttl: Duration,
    pub quadrature: QuadratureSpec,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            session_ttl: Duration::from_secs(3600),
            quadrature: QuadratureSpec::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_env() -> anyhow::Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Builds the config from any key lookup; unset keys keep their defaults.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> anyhow::Result<Self> {
        let mut c = Self::default();
        if let Some(v) = get(ENV_BIND) {
            c.bind = v.parse().with_context(|| format!("{ENV_BIND}={v} is not a socket address"))?;
        }
        if let Some(v) = get(ENV_SESSION_TTL) {
            let secs: u64 = v.parse().with_context(|| format!("{ENV_SESSION_TTL}={v} is not a number of seconds"))?;
            if secs == 0 {
                bail!("{ENV_SESSION_TTL} must be positive");
            }
            c.session_ttl = Duration::from_secs(secs);
        }
        if let Some(v) = get(ENV_QUADRATURE_SCHEME) {
            c.quadrature.scheme = match v.as_str() {
                "gauss-hermite" => QuadratureScheme::GaussHermite,
                "adaptive-trapezoid" => QuadratureScheme::AdaptiveTrapezoid,
                _ => bail!("{ENV_QUADRATURE_SCHEME}={v}: expected gauss-hermite or adaptive-trapezoid"),
            };
        }
        if let Some(v) = get(ENV_QUADRATURE_NODES) {
            c.quadrature.node_count = v.parse().with_context(|| format!("{ENV_QUADRATURE_NODES}={v}"))?;
        }
        if let Some(v) = get(ENV_QUADRATURE_RADIUS) {
            c.quadrature.truncation_radius = v.parse().with_context(|| format!("{ENV_QUADRATURE_RADIUS}={v}"))?;
        }
        c.quadrature.validate().map_err(|e| anyhow::anyhow!("quadrature settings: {e}"))?;
        Ok(c)
    }
}
