//! Login principals and their roles.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Student,
    Staff,
    Lecturer,
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "student" => Ok(Role::Student),
            "staff" => Ok(Role::Staff),
            "lecturer" => Ok(Role::Lecturer),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

/// A principal with a salted SHA-256 password digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub principal: String,
    pub role: Role,
    salt: String,
    digest: String,
}

fn digest(salt: &str, password: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update([0u8]);
    h.update(password.as_bytes());
    hex::encode(h.finalize())
}

impl Account {
    pub fn new(principal: impl Into<String>, role: Role, password: &str) -> Self {
        let salt = hex::encode(rand::random::<[u8; 16]>());
        let digest = digest(&salt, password);
        Self {
            principal: principal.into(),
            role,
            salt,
            digest,
        }
    }

    pub fn verify(&self, password: &str) -> bool {
        let candidate = digest(&self.salt, password);
        // constant-time compare over equal-length hex strings
        candidate.len() == self.digest.len()
            && candidate
                .bytes()
                .zip(self.digest.bytes())
                .fold(0u8, |acc, (a, b)| acc | (a ^ b))
                == 0
    }
}
