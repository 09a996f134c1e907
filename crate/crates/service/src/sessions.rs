//! Bearer-token sessions held in memory. A restart logs everybody out.

use std::collections::HashMap;
use std::time::Duration;

use krs_core::{Role, Timestamp};
use parking_lot::Mutex;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub token: String,
    pub principal: String,
    pub role: Role,
    pub expires_at: Timestamp,
}

#[derive(Debug)]
pub struct SessionStore {
    ttl: chrono::Duration,
    sessions: Mutex<HashMap<String, Session>>,
}

/// 128 random bits from the thread-local CSPRNG, hex encoded.
fn fresh_token() -> String {
    hex::encode(rand::random::<[u8; 16]>())
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl: chrono::Duration::from_std(ttl).unwrap_or(chrono::Duration::MAX),
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn issue(&self, principal: &str, role: Role, now: Timestamp) -> Session {
        let session = Session {
            token: fresh_token(),
            principal: principal.to_owned(),
            role,
            expires_at: now + self.ttl,
        };
        let mut map = self.sessions.lock();
        map.retain(|_, s| s.expires_at > now);
        map.insert(session.token.clone(), session.clone());
        session
    }

    /// The live session for `token`. Expired sessions are dropped on sight.
    pub fn authorize(&self, token: &str, now: Timestamp) -> Option<Session> {
        let mut map = self.sessions.lock();
        match map.get(token) {
            Some(s) if s.expires_at > now => Some(s.clone()),
            Some(_) => {
                map.remove(token);
                None
            }
            None => None,
        }
    }

    pub fn revoke(&self, token: &str) {
        self.sessions.lock().remove(token);
    }
}
