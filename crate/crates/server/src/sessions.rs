//! In-memory builder sessions with idle expiry.

use crate::error::ServiceError;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, PoisonError};
use std::time::{Duration, Instant};
use wealth_target::single_period::BuilderSession;

struct Entry {
    session: Arc<Mutex<BuilderSession>>,
    last_access: Instant,
}

/// Sessions keyed by an opaque id. Each session has its own lock, so
/// mutations of one session are serialized while others proceed.
pub struct SessionStore {
    ttl: Duration,
    entries: Mutex<HashMap<String, Entry>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self { ttl, entries: Mutex::new(HashMap::new()) }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn insert(&self, session: BuilderSession) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut map = self.entries.lock().unwrap_or_else(PoisonError::into_inner);
        map.insert(id.clone(), Entry { session: Arc::new(Mutex::new(session)), last_access: Instant::now() });
        id
    }

    /// Looks up a live session and refreshes its idle timer.
    pub fn get(&self, id: &str) -> Result<Arc<Mutex<BuilderSession>>, ServiceError> {
        let now = Instant::now();
        let mut map = self.entries.lock().unwrap_or_else(PoisonError::into_inner);
        match map.get_mut(id) {
            Some(e) if now.duration_since(e.last_access) <= self.ttl => {
                e.last_access = now;
                Ok(e.session.clone())
            }
            Some(_) => {
                map.remove(id);
                Err(ServiceError::UnknownSession(id.to_string()))
            }
            None => Err(ServiceError::UnknownSession(id.to_string())),
        }
    }

    /// Drops expired sessions, returning how many were removed.
    pub fn purge_expired(&self) -> usize {
        let now = Instant::now();
        let mut map = self.entries.lock().unwrap_or_else(PoisonError::into_inner);
        let before = map.len();
        map.retain(|_, e| now.duration_since(e.last_access) <= self.ttl);
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(PoisonError::into_inner).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
