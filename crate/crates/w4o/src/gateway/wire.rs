use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::agents::ReflectionVerdict;
use crate::geometry::{DepthMap, PixelMask};
use crate::scene::RgbImage;

/// The five wire routes, one per model slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    Plan,
    Dream,
    Critique,
    Depth,
    Segment,
}

impl RequestKind {
    pub const ALL: [RequestKind; 5] = [
        RequestKind::Plan,
        RequestKind::Dream,
        RequestKind::Critique,
        RequestKind::Depth,
        RequestKind::Segment,
    ];

    pub fn route(self) -> &'static str {
        match self {
            RequestKind::Plan => "/v1/plan",
            RequestKind::Dream => "/v1/dream",
            RequestKind::Critique => "/v1/critique",
            RequestKind::Depth => "/v1/depth",
            RequestKind::Segment => "/v1/segment",
        }
    }

    pub fn from_route(route: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.route() == route)
    }
}

/// One logical request. The id is minted once and reused verbatim on
/// every retry of this request.
#[derive(Debug, Clone)]
pub struct BackendRequest {
    pub request_id: String,
    pub kind: RequestKind,
    pub payload: serde_json::Value,
}

impl BackendRequest {
    pub fn new(kind: RequestKind, payload: serde_json::Value) -> Self {
        Self {
            request_id: uuid::Uuid::new_v4().to_string(),
            kind,
            payload,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanPayload {
    pub task: String,
    pub image_png_b64: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanReply {
    pub subtasks: Vec<String>,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DreamPayload {
    pub image_png_b64: String,
    pub prompt: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DreamReply {
    pub image_png_b64: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CritiquePayload {
    pub image_before_b64: String,
    pub image_after_b64: String,
    pub subtask: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Revise,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CritiqueReply {
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revised_prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthPayload {
    pub image_png_b64: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthReply {
    pub width: u32,
    pub height: u32,
    pub depth_f32le_b64: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentPayload {
    pub image_png_b64: String,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentReply {
    pub mask_png_b64: String,
}

pub fn encode_image(image: &RgbImage) -> String {
    B64.encode(image.to_png())
}

pub fn decode_image(b64: &str) -> Result<RgbImage, GatewayError> {
    let bytes = B64
        .decode(b64)
        .map_err(|e| GatewayError::MalformedResponse(format!("image base64: {e}")))?;
    RgbImage::from_png(&bytes).map_err(GatewayError::MalformedResponse)
}

/// Depth travels uncompressed: little-endian f32, row-major, invalid
/// pixels as 0.0.
pub fn encode_depth(depth: &DepthMap) -> DepthReply {
    DepthReply {
        width: depth.width(),
        height: depth.height(),
        depth_f32le_b64: B64.encode(depth.to_f32_le_bytes()),
    }
}

pub fn decode_depth(reply: &DepthReply) -> Result<DepthMap, GatewayError> {
    let bytes = B64
        .decode(&reply.depth_f32le_b64)
        .map_err(|e| GatewayError::MalformedResponse(format!("depth base64: {e}")))?;
    DepthMap::from_f32_le_bytes(reply.width, reply.height, &bytes)
        .map_err(|e| GatewayError::MalformedResponse(e.to_string()))
}

/// Masks travel as 8-bit grayscale PNG, 255 marking object pixels.
pub fn encode_mask(mask: &PixelMask) -> String {
    let (w, h) = (mask.width(), mask.height());
    let mut buf = Vec::with_capacity((w * h) as usize);
    for v in 0..h {
        for u in 0..w {
            buf.push(if mask.get(u, v) { 255u8 } else { 0u8 });
        }
    }
    let img: image::GrayImage =
        image::ImageBuffer::from_raw(w, h, buf).expect("pixel buffer matches dimensions");
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .expect("in-memory png encode cannot fail");
    B64.encode(out.into_inner())
}

pub fn decode_mask(b64: &str) -> Result<PixelMask, GatewayError> {
    let bytes = B64
        .decode(b64)
        .map_err(|e| GatewayError::MalformedResponse(format!("mask base64: {e}")))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| GatewayError::MalformedResponse(format!("mask png: {e}")))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok(PixelMask::from_fn(w, h, |u, v| img.get_pixel(u, v)[0] >= 128))
}

pub fn verdict_from_reply(reply: CritiqueReply) -> Result<ReflectionVerdict, GatewayError> {
    let rationale = reply.rationale.unwrap_or_default();
    match reply.decision {
        Decision::Accept => Ok(ReflectionVerdict::Accept { rationale }),
        Decision::Revise => {
            let revised_prompt = reply
                .revised_prompt
                .filter(|p| !p.is_empty())
                .ok_or_else(|| {
                    GatewayError::MalformedResponse(
                        "revise decision without a revised_prompt".to_string(),
                    )
                })?;
            Ok(ReflectionVerdict::Revise {
                revised_prompt,
                rationale,
            })
        }
    }
}

pub fn reply_from_verdict(verdict: &ReflectionVerdict) -> CritiqueReply {
    match verdict {
        ReflectionVerdict::Accept { rationale } => CritiqueReply {
            decision: Decision::Accept,
            revised_prompt: None,
            rationale: Some(rationale.clone()),
        },
        ReflectionVerdict::Revise {
            revised_prompt,
            rationale,
        } => CritiqueReply {
            decision: Decision::Revise,
            revised_prompt: Some(revised_prompt.clone()),
            rationale: Some(rationale.clone()),
        },
    }
}
