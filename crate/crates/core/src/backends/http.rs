use std::sync::{Condvar, Mutex};
use std::time::Duration;

use super::{
    wire, BackendDescriptor, BackendError, BackendInfo, BackendService, Image, InpaintRequest, ScoredMask,
    SegmentRequest, TrackReply, TrackRequest,
};

/// Counting semaphore bounding in-flight requests.
struct Gate {
    limit: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(limit: usize) -> Self {
        Self { limit, used: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.limit {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

/// Blocking client for the `/v1` protocol.
///
/// Transport failures (connect errors, timeouts, truncated bodies) are retried up to `retries`
/// times. HTTP error statuses are returned immediately.
pub struct HttpBackend {
    base: String,
    client: reqwest::blocking::Client,
    retries: u32,
    gate: Gate,
}

impl HttpBackend {
    pub fn new(desc: &BackendDescriptor) -> Result<Self, BackendError> {
        let endpoint = desc
            .endpoint
            .as_deref()
            .ok_or_else(|| BackendError::Config("http backend needs an endpoint".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(desc.timeout_s))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self {
            base: endpoint.trim_end_matches('/').to_string(),
            client,
            retries: desc.retries,
            gate: Gate::new(desc.max_in_flight.max(1)),
        })
    }

    fn call(&self, path: &str, body: Option<String>) -> Result<String, BackendError> {
        let _permit = self.gate.acquire();
        let url = format!("{}{}", self.base, path);
        let attempts = self.retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            let req = match &body {
                Some(b) => self.client.post(&url).header("content-type", "application/json").body(b.clone()),
                None => self.client.get(&url),
            };
            let reply = req.send().and_then(|r| {
                let status = r.status().as_u16();
                r.text().map(|t| (status, t))
            });
            match reply {
                Ok((200..=299, text)) => return Ok(text),
                Ok((status, text)) => {
                    return Err(BackendError::Status { status, message: wire::decode_error(&text) });
                }
                Err(e) => {
                    last = e.to_string();
                    log::debug!("{url}: attempt {attempt}/{attempts} failed: {last}");
                }
            }
        }
        Err(BackendError::Transport { attempts, message: last })
    }
}

impl BackendService for HttpBackend {
    fn health(&self) -> Result<BackendInfo, BackendError> {
        wire::decode_health(&self.call("/v1/health", None)?)
    }

    fn inpaint(&self, req: &InpaintRequest) -> Result<Image, BackendError> {
        let body = wire::encode_inpaint_request(req)?;
        wire::decode_image_reply(&self.call("/v1/inpaint", Some(body))?)
    }

    fn segment(&self, req: &SegmentRequest) -> Result<Vec<ScoredMask>, BackendError> {
        wire::decode_segment_reply(&self.call("/v1/segment", Some(wire::encode_segment_request(req)))?)
    }

    fn track(&self, req: &TrackRequest) -> Result<TrackReply, BackendError> {
        let reply = self.call("/v1/track", Some(wire::encode_track_request(req)))?;
        wire::decode_track_reply(&reply, &req.prev_mask)
    }
}
