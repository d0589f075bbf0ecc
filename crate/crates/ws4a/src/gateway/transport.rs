//! Transport layer: the one seam every service call goes through, so
//! record/replay and the fail-on-use test transport wrap all clients
//! uniformly.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::gateway::{GatewayError, Method, ServiceKind, ServiceRequest};

/// Raw response as the gateway stores it: verbatim bytes plus the content
/// type. HTTP status is folded into the transport layer (5xx retried,
/// then surfaced as transport errors; anything else passes through).
#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub content_type: String,
    pub body: Vec<u8>,
}

pub trait Transport: Send + Sync {
    fn execute(&self, request: &ServiceRequest) -> Result<TransportResponse, GatewayError>;
}

/// Live HTTP transport with per-service politeness delay and fixed retry.
pub struct HttpTransport {
    agent: ureq::Agent,
    min_delay: Duration,
    attempts: usize,
    last_request: Mutex<HashMap<ServiceKind, Instant>>,
}

impl HttpTransport {
    pub fn new(min_delay: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport {
            agent,
            min_delay,
            attempts: 3,
            last_request: Mutex::new(HashMap::new()),
        }
    }

    fn wait_politely(&self, service: ServiceKind) {
        if self.min_delay.is_zero() {
            return;
        }
        let sleep_for = {
            let mut last = self.last_request.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let wait = last
                .get(&service)
                .and_then(|t| self.min_delay.checked_sub(now.duration_since(*t)))
                .unwrap_or(Duration::ZERO);
            last.insert(service, now + wait);
            wait
        };
        if !sleep_for.is_zero() {
            std::thread::sleep(sleep_for);
        }
    }

    fn attempt(&self, request: &ServiceRequest) -> Result<(u16, TransportResponse), GatewayError> {
        let mut response = match request.method {
            Method::Get => self.agent.get(&request.url).call(),
            Method::Post => {
                let body = request.body.clone().unwrap_or_default();
                self.agent.post(&request.url).send(&body)
            }
        }
        .map_err(|e| GatewayError::Transport {
            service: request.service,
            message: e.to_string(),
        })?;
        let status = response.status().as_u16();
        let content_type = response
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or("application/octet-stream")
            .to_string();
        let body = response
            .body_mut()
            .read_to_vec()
            .map_err(|e| GatewayError::Transport {
                service: request.service,
                message: e.to_string(),
            })?;
        Ok((status, TransportResponse { content_type, body }))
    }
}

impl Transport for HttpTransport {
    fn execute(&self, request: &ServiceRequest) -> Result<TransportResponse, GatewayError> {
        let mut last_err = None;
        for _ in 0..self.attempts {
            self.wait_politely(request.service);
            match self.attempt(request) {
                Ok((status, response)) if status < 500 => return Ok(response),
                Ok((status, _)) => {
                    last_err = Some(GatewayError::Transport {
                        service: request.service,
                        message: format!("server error {status} from {}", request.url),
                    });
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    }
}

/// Transport that refuses every request. Installed in replay mode so a
/// cache miss can never silently reach the network.
pub struct FailTransport;

impl Transport for FailTransport {
    fn execute(&self, request: &ServiceRequest) -> Result<TransportResponse, GatewayError> {
        Err(GatewayError::Transport {
            service: request.service,
            message: format!("network disabled (replay mode), refused {}", request.url),
        })
    }
}
