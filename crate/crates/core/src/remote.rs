//! Blocking JSON-over-HTTP calls with retry, shared by the embedding and
//! generation clients.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubled for each later one.
    pub base_delay: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(200),
            timeout: Duration::from_secs(120),
        }
    }
}

pub(crate) fn agent(policy: &RetryPolicy) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(policy.timeout))
        .build()
        .into()
}

pub(crate) fn join_url(base: &str, path: &str) -> String {
    format!(
        "{}/{}",
        base.trim_end_matches('/'),
        path.trim_start_matches('/')
    )
}

/// POSTs `body` as JSON. Transport failures and non-2xx statuses are retried
/// per `policy`; an undecodable 2xx body fails immediately.
pub(crate) fn post_json<B: Serialize, T: DeserializeOwned>(
    agent: &ureq::Agent,
    url: &str,
    body: &B,
    policy: &RetryPolicy,
) -> Result<T> {
    let mut last = String::new();
    for attempt in 0..policy.attempts.max(1) {
        if attempt > 0 {
            std::thread::sleep(policy.base_delay * 2u32.pow(attempt - 1));
        }
        match agent.post(url).send_json(body) {
            Ok(mut resp) => {
                return resp.body_mut().read_json::<T>().map_err(|e| Error::Remote {
                    endpoint: url.to_string(),
                    message: format!("undecodable response: {e}"),
                })
            }
            Err(e) => {
                log::warn!("{url}: attempt {} failed: {e}", attempt + 1);
                last = e.to_string();
            }
        }
    }
    Err(Error::Remote {
        endpoint: url.to_string(),
        message: format!("failed after {} attempts: {last}", policy.attempts.max(1)),
    })
}

pub(crate) fn get_ok(agent: &ureq::Agent, url: &str) -> Result<()> {
    agent
        .get(url)
        .call()
        .map(|_| ())
        .map_err(|e| Error::Remote {
            endpoint: url.to_string(),
            message: e.to_string(),
        })
}

/// Counting semaphore bounding in-flight requests across threads.
pub(crate) struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

pub(crate) struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    pub(crate) fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    pub(crate) fn acquire(&self) -> Permit<'_> {
        let mut n = self.permits.lock().unwrap();
        while *n == 0 {
            n = self.cv.wait(n).unwrap();
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}
