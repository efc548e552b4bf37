use std::time::Duration;
use wealth_target::single_period::{BuilderSession, SinglePeriodMarket};
use wealth_target_server::config::*;
use wealth_target_server::sessions::SessionStore;

fn session() -> BuilderSession {
    BuilderSession::new(SinglePeriodMarket::new(0.07, 0.2, 0.02, 10).unwrap(), 1.0).unwrap()
}

#[test]
fn ids_are_unique_and_sessions_expire() {
    let store = SessionStore::new(Duration::from_millis(50));
    let a = store.insert(session());
    let b = store.insert(session());
    assert_ne!(a, b);
    assert!(store.get(&a).is_ok());
    std::thread::sleep(Duration::from_millis(80));
    assert!(store.get(&a).is_err());
    assert_eq!(store.purge_expired(), 1);
    assert!(store.is_empty());
}

#[test]
fn config_reads_environment_keys() {
    let c = ServiceConfig::from_lookup(|k| match k {
        ENV_BIND => Some("0.0.0.0:9000".into()),
        ENV_SESSION_TTL => Some("60".into()),
        ENV_QUADRATURE_SCHEME => Some("adaptive-trapezoid".into()),
        _ => None,
    })
    .unwrap();
    assert_eq!(c.bind.port(), 9000);
    assert_eq!(c.session_ttl, Duration::from_secs(60));
    assert!(ServiceConfig::from_lookup(|k| (k == ENV_SESSION_TTL).then(|| "0".into())).is_err());
    assert!(ServiceConfig::from_lookup(|k| (k == ENV_QUADRATURE_NODES).then(|| "4".into())).is_err());
    assert_eq!(ServiceConfig::from_lookup(|_| None).unwrap(), ServiceConfig::default());
}
