//! Service contracts for inpainting, segmentation and tracking.
//!
//! Every call goes through [`Backend`], which validates requests and enforces the client-side
//! guarantees regardless of what the service replies: inpainted images keep every pixel
//! outside the request mask, segment lists are sorted by score, and reply dimensions match.

mod http;
mod mock;
pub mod wire;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DepthMap, Image, Mask};

pub use http::HttpBackend;
pub use mock::{color_components, mock_fill_color, MockBackend, TRACK_IOU_FLOOR};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("server replied {status}: {message}")]
    Status { status: u16, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InpaintMode {
    Inpaint,
    DepthGuided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InpaintRequest {
    pub image: Image,
    /// Set pixels are synthesized.
    pub mask: Mask,
    pub depth: Option<DepthMap>,
    pub prompt: String,
    pub seed: u64,
    pub mode: InpaintMode,
}

impl InpaintRequest {
    pub fn check(&self) -> Result<(), BackendError> {
        if self.mask.dims() != self.image.dims() {
            return Err(BackendError::InvalidRequest(format!(
                "mask {:?} vs image {:?}",
                self.mask.dims(),
                self.image.dims()
            )));
        }
        if self.prompt.is_empty() {
            return Err(BackendError::InvalidRequest("empty prompt".into()));
        }
        match (&self.depth, self.mode) {
            (Some(d), InpaintMode::DepthGuided) if d.dims() != self.image.dims() => Err(
                BackendError::InvalidRequest(format!("depth {:?} vs image {:?}", d.dims(), self.image.dims())),
            ),
            (Some(_), InpaintMode::DepthGuided) | (None, InpaintMode::Inpaint) => Ok(()),
            (None, InpaintMode::DepthGuided) => {
                Err(BackendError::InvalidRequest("depth_guided mode needs a depth map".into()))
            }
            (Some(_), InpaintMode::Inpaint) => {
                Err(BackendError::InvalidRequest("depth supplied in plain inpaint mode".into()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentRequest {
    pub image: Image,
    /// Point prompt `(x, y)`; `None` segments everything.
    pub point: Option<(u32, u32)>,
}

impl SegmentRequest {
    pub fn check(&self) -> Result<(), BackendError> {
        if let Some((x, y)) = self.point {
            if x >= self.image.width() || y >= self.image.height() {
                return Err(BackendError::InvalidRequest(format!(
                    "point ({x}, {y}) outside {:?} image",
                    self.image.dims()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackRequest {
    pub prev_image: Image,
    pub next_image: Image,
    pub prev_mask: Mask,
}

impl TrackRequest {
    pub fn check(&self) -> Result<(), BackendError> {
        let d = self.prev_image.dims();
        if self.next_image.dims() != d || self.prev_mask.dims() != d {
            return Err(BackendError::InvalidRequest(format!(
                "prev {:?}, next {:?}, mask {:?}",
                d,
                self.next_image.dims(),
                self.prev_mask.dims()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredMask {
    pub mask: Mask,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackReply {
    pub mask: Mask,
    /// The tracker lost the object and returned the previous mask.
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub name: String,
    pub version: String,
    pub modes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
}

/// A generation / segmentation / tracking service.
pub trait BackendService: Send + Sync {
    fn health(&self) -> Result<BackendInfo, BackendError>;
    fn inpaint(&self, req: &InpaintRequest) -> Result<Image, BackendError>;
    fn segment(&self, req: &SegmentRequest) -> Result<Vec<ScoredMask>, BackendError>;
    fn track(&self, req: &TrackRequest) -> Result<TrackReply, BackendError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

fn default_in_flight() -> usize {
    4
}

impl BackendDescriptor {
    pub fn mock() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            timeout_s: default_timeout(),
            retries: default_retries(),
            max_in_flight: default_in_flight(),
        }
    }

    pub fn http(endpoint: impl Into<String>) -> Self {
        Self { kind: BackendKind::Http, endpoint: Some(endpoint.into()), ..Self::mock() }
    }

    pub fn check(&self) -> Result<(), BackendError> {
        match (self.kind, &self.endpoint) {
            (BackendKind::Http, None) => Err(BackendError::Config("http backend needs an endpoint".into())),
            (BackendKind::Mock, Some(_)) => Err(BackendError::Config("mock backend takes no endpoint".into())),
            _ if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) => {
                Err(BackendError::Config("timeout must be positive".into()))
            }
            _ if self.max_in_flight == 0 => Err(BackendError::Config("max_in_flight must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Shareable handle that enforces the request and reply contracts around a [`BackendService`].
#[derive(Clone)]
pub struct Backend {
    service: Arc<dyn BackendService>,
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Backend")
    }
}

impl Backend {
    pub fn new(service: Arc<dyn BackendService>) -> Self {
        Self { service }
    }

    pub fn mock() -> Self {
        Self::new(Arc::new(MockBackend))
    }

    pub fn connect(desc: &BackendDescriptor) -> Result<Self, BackendError> {
        desc.check()?;
        Ok(match desc.kind {
            BackendKind::Mock => Self::mock(),
            BackendKind::Http => Self::new(Arc::new(HttpBackend::new(desc)?)),
        })
    }

    pub fn health(&self) -> Result<BackendInfo, BackendError> {
        self.service.health()
    }

    /// Pixels outside `req.mask` are copied from `req.image` whatever the service returned.
    ///
    /// Depth is rounded to whole millimetres first, as on the wire, so in-process and remote
    /// services see the same request.
    pub fn inpaint(&self, req: &InpaintRequest) -> Result<Image, BackendError> {
        req.check()?;
        if req.mask.is_empty() {
            return Ok(req.image.clone());
        }
        let quantized;
        let req = match &req.depth {
            Some(d) => {
                let depth = d.quantized().map_err(|e| BackendError::InvalidRequest(format!("depth: {e}")))?;
                quantized = InpaintRequest { depth: Some(depth), ..req.clone() };
                &quantized
            }
            None => req,
        };
        let reply = self.service.inpaint(req)?;
        if reply.dims() != req.image.dims() {
            return Err(BackendError::Protocol(format!(
                "inpaint reply is {:?}, request was {:?}",
                reply.dims(),
                req.image.dims()
            )));
        }
        let mut out = req.image.clone();
        for i in 0..out.pixel_count() {
            if req.mask.at(i) {
                out.put(i, reply.at(i));
            }
        }
        Ok(out)
    }

    /// Masks sorted by descending score. Point prompts keep only masks containing the point.
    pub fn segment(&self, req: &SegmentRequest) -> Result<Vec<ScoredMask>, BackendError> {
        req.check()?;
        let mut masks = self.service.segment(req)?;
        for m in &masks {
            if m.mask.dims() != req.image.dims() {
                return Err(BackendError::Protocol(format!(
                    "segment mask is {:?}, image is {:?}",
                    m.mask.dims(),
                    req.image.dims()
                )));
            }
            if !(0.0..=1.0).contains(&m.score) {
                return Err(BackendError::Protocol(format!("segment score {} outside [0, 1]", m.score)));
            }
        }
        if let Some((x, y)) = req.point {
            masks.retain(|m| m.mask.get(x, y));
        }
        masks.sort_by(|a, b| b.score.total_cmp(&a.score));
        Ok(masks)
    }

    pub fn track(&self, req: &TrackRequest) -> Result<TrackReply, BackendError> {
        req.check()?;
        let reply = self.service.track(req)?;
        if reply.mask.dims() != req.next_image.dims() {
            return Err(BackendError::Protocol(format!(
                "track mask is {:?}, image is {:?}",
                reply.mask.dims(),
                req.next_image.dims()
            )));
        }
        Ok(reply)
    }
}

/// One descriptor per service role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptors {
    pub inpaint: BackendDescriptor,
    pub segment: BackendDescriptor,
    pub track: BackendDescriptor,
}

impl Default for BackendDescriptors {
    fn default() -> Self {
        Self::all(BackendDescriptor::mock())
    }
}

impl BackendDescriptors {
    pub fn all(desc: BackendDescriptor) -> Self {
        Self { inpaint: desc.clone(), segment: desc.clone(), track: desc }
    }
}

/// Connected handles for inpainting, segmentation and tracking.
#[derive(Clone, Debug)]
pub struct BackendSet {
    pub inpaint: Backend,
    pub segment: Backend,
    pub track: Backend,
}

impl BackendSet {
    pub fn mock() -> Self {
        Self::uniform(Backend::mock())
    }

    pub fn uniform(backend: Backend) -> Self {
        Self { inpaint: backend.clone(), segment: backend.clone(), track: backend }
    }

    pub fn connect(desc: &BackendDescriptors) -> Result<Self, BackendError> {
        Ok(Self {
            inpaint: Backend::connect(&desc.inpaint)?,
            segment: Backend::connect(&desc.segment)?,
            track: Backend::connect(&desc.track)?,
        })
    }
}
