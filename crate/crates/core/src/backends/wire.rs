//! JSON wire format for the `/v1` HTTP protocol.
//!
//! Images travel as base64 PNG: RGB8 for images, L8 (255 = member) for masks, L16 millimeters
//! for depth. Unknown fields are ignored on decode. [`handle`] serves the protocol for any
//! [`BackendService`], independent of the HTTP server in front of it.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{
    BackendError, BackendInfo, BackendService, InpaintMode, InpaintRequest, ScoredMask, SegmentRequest,
    TrackReply, TrackRequest,
};
use crate::data::{
    decode_depth_png, decode_mask_png, decode_rgb_png, encode_depth_png, encode_mask_png, encode_rgb_png,
    DepthMap, Image, Mask,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePoint {
    pub x: u32,
    pub y: u32,
}

#[derive(Serialize, Deserialize)]
pub struct InpaintBody {
    pub image: String,
    pub mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<String>,
    pub prompt: String,
    pub seed: u64,
    pub mode: InpaintMode,
}

#[derive(Serialize, Deserialize)]
pub struct ImageBody {
    pub image: String,
}

#[derive(Serialize, Deserialize)]
pub struct SegmentBody {
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<WirePoint>,
}

#[derive(Serialize, Deserialize)]
pub struct SegmentReplyBody {
    pub masks: Vec<String>,
    pub scores: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct TrackBody {
    pub prev_image: String,
    pub next_image: String,
    pub prev_mask: String,
}

#[derive(Serialize, Deserialize)]
pub struct TrackReplyBody {
    pub mask: String,
    /// Optional extension; servers that omit it are treated by comparing masks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<bool>,
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn b64(bytes: Vec<u8>) -> String {
    STANDARD.encode(bytes)
}

fn unb64(field: &str, s: &str) -> Result<Vec<u8>, BackendError> {
    STANDARD.decode(s).map_err(|e| BackendError::Protocol(format!("field {field}: invalid base64: {e}")))
}

fn field_image(field: &str, s: &str) -> Result<Image, BackendError> {
    decode_rgb_png(&unb64(field, s)?).map_err(|e| BackendError::Protocol(format!("field {field}: {e}")))
}

fn field_mask(field: &str, s: &str) -> Result<Mask, BackendError> {
    decode_mask_png(&unb64(field, s)?).map_err(|e| BackendError::Protocol(format!("field {field}: {e}")))
}

fn field_depth(field: &str, s: &str) -> Result<DepthMap, BackendError> {
    decode_depth_png(&unb64(field, s)?).map_err(|e| BackendError::Protocol(format!("field {field}: {e}")))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("wire bodies serialise")
}

fn from_json<'a, T: Deserialize<'a>>(what: &str, body: &'a str) -> Result<T, BackendError> {
    serde_json::from_str(body).map_err(|e| BackendError::Protocol(format!("{what}: {e}")))
}

pub fn encode_inpaint_request(req: &InpaintRequest) -> Result<String, BackendError> {
    let depth = match &req.depth {
        Some(d) => Some(b64(encode_depth_png(d).map_err(|e| BackendError::InvalidRequest(e.to_string()))?)),
        None => None,
    };
    Ok(to_json(&InpaintBody {
        image: b64(encode_rgb_png(&req.image)),
        mask: b64(encode_mask_png(&req.mask)),
        depth,
        prompt: req.prompt.clone(),
        seed: req.seed,
        mode: req.mode,
    }))
}

pub fn decode_inpaint_request(body: &str) -> Result<InpaintRequest, BackendError> {
    let b: InpaintBody = from_json("inpaint request", body)?;
    Ok(InpaintRequest {
        image: field_image("image", &b.image)?,
        mask: field_mask("mask", &b.mask)?,
        depth: b.depth.as_deref().map(|d| field_depth("depth", d)).transpose()?,
        prompt: b.prompt,
        seed: b.seed,
        mode: b.mode,
    })
}

pub fn encode_image_reply(img: &Image) -> String {
    to_json(&ImageBody { image: b64(encode_rgb_png(img)) })
}

pub fn decode_image_reply(body: &str) -> Result<Image, BackendError> {
    let b: ImageBody = from_json("inpaint reply", body)?;
    field_image("image", &b.image)
}

pub fn encode_segment_request(req: &SegmentRequest) -> String {
    to_json(&SegmentBody {
        image: b64(encode_rgb_png(&req.image)),
        point: req.point.map(|(x, y)| WirePoint { x, y }),
    })
}

pub fn decode_segment_request(body: &str) -> Result<SegmentRequest, BackendError> {
    let b: SegmentBody = from_json("segment request", body)?;
    Ok(SegmentRequest { image: field_image("image", &b.image)?, point: b.point.map(|p| (p.x, p.y)) })
}

pub fn encode_segment_reply(masks: &[ScoredMask]) -> String {
    to_json(&SegmentReplyBody {
        masks: masks.iter().map(|m| b64(encode_mask_png(&m.mask))).collect(),
        scores: masks.iter().map(|m| m.score).collect(),
    })
}

pub fn decode_segment_reply(body: &str) -> Result<Vec<ScoredMask>, BackendError> {
    let b: SegmentReplyBody = from_json("segment reply", body)?;
    if b.masks.len() != b.scores.len() {
        return Err(BackendError::Protocol(format!("{} masks but {} scores", b.masks.len(), b.scores.len())));
    }
    b.masks
        .iter()
        .zip(b.scores)
        .enumerate()
        .map(|(i, (m, score))| Ok(ScoredMask { mask: field_mask(&format!("masks[{i}]"), m)?, score }))
        .collect()
}

pub fn encode_track_request(req: &TrackRequest) -> String {
    to_json(&TrackBody {
        prev_image: b64(encode_rgb_png(&req.prev_image)),
        next_image: b64(encode_rgb_png(&req.next_image)),
        prev_mask: b64(encode_mask_png(&req.prev_mask)),
    })
}

pub fn decode_track_request(body: &str) -> Result<TrackRequest, BackendError> {
    let b: TrackBody = from_json("track request", body)?;
    Ok(TrackRequest {
        prev_image: field_image("prev_image", &b.prev_image)?,
        next_image: field_image("next_image", &b.next_image)?,
        prev_mask: field_mask("prev_mask", &b.prev_mask)?,
    })
}

pub fn encode_track_reply(reply: &TrackReply) -> String {
    to_json(&TrackReplyBody { mask: b64(encode_mask_png(&reply.mask)), fallback: Some(reply.fallback) })
}

/// `prev_mask` resolves replies that omit the `fallback` field: an unchanged mask counts as one.
pub fn decode_track_reply(body: &str, prev_mask: &Mask) -> Result<TrackReply, BackendError> {
    let b: TrackReplyBody = from_json("track reply", body)?;
    let mask = field_mask("mask", &b.mask)?;
    let fallback = b.fallback.unwrap_or(mask == *prev_mask);
    Ok(TrackReply { mask, fallback })
}

pub fn encode_health(info: &BackendInfo) -> String {
    to_json(info)
}

pub fn decode_health(body: &str) -> Result<BackendInfo, BackendError> {
    from_json("health reply", body)
}

pub fn encode_error(message: &str) -> String {
    to_json(&ErrorBody { error: message.to_string() })
}

/// Error text from an error body, or the raw body when it is not the declared shape.
pub fn decode_error(body: &str) -> String {
    serde_json::from_str::<ErrorBody>(body).map(|b| b.error).unwrap_or_else(|_| body.to_string())
}

/// Serves one protocol request against `service`. Returns `(status, JSON body)`.
pub fn handle(service: &dyn BackendService, method: &str, path: &str, body: &str) -> (u16, String) {
    let result = match (method, path) {
        ("GET", "/v1/health") => service.health().map(|h| encode_health(&h)),
        ("POST", "/v1/inpaint") => decode_inpaint_request(body)
            .and_then(|r| r.check().map(|_| r))
            .and_then(|r| service.inpaint(&r))
            .map(|img| encode_image_reply(&img)),
        ("POST", "/v1/segment") => decode_segment_request(body)
            .and_then(|r| r.check().map(|_| r))
            .and_then(|r| service.segment(&r))
            .map(|m| encode_segment_reply(&m)),
        ("POST", "/v1/track") => decode_track_request(body)
            .and_then(|r| r.check().map(|_| r))
            .and_then(|r| service.track(&r))
            .map(|t| encode_track_reply(&t)),
        (_, "/v1/health" | "/v1/inpaint" | "/v1/segment" | "/v1/track") => {
            return (405, encode_error(&format!("method {method} not allowed on {path}")));
        }
        _ => return (404, encode_error(&format!("no route {path}"))),
    };
    match result {
        Ok(body) => (200, body),
        Err(e @ (BackendError::Protocol(_) | BackendError::InvalidRequest(_))) => (400, encode_error(&e.to_string())),
        Err(e) => (500, encode_error(&e.to_string())),
    }
}
