use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use ureq::Agent;

use super::wire::{
    decode_depth, decode_image, decode_mask, encode_image, verdict_from_reply, BackendRequest,
    CritiquePayload, CritiqueReply, DepthPayload, DepthReply, DreamPayload, DreamReply,
    PlanPayload, PlanReply, RequestKind, SegmentPayload, SegmentReply,
};
use super::GatewayError;
use crate::agents::{
    BackendError, BackendSuite, CriticBackend, DepthBackend, DreamerBackend, PlanResponse,
    PlannerBackend, ReflectionVerdict, SegmenterBackend,
};
use crate::geometry::{DepthMap, PixelMask};
use crate::scene::RgbImage;

/// Environment variable that overrides the remote base URL.
pub const BACKEND_URL_ENV: &str = "W4O_BACKEND_URL";

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub base_url: String,
    /// Per-attempt budget, not a budget for the whole logical call.
    pub timeout: Duration,
    pub max_retries: usize,
    /// First retry delay; each later retry doubles it.
    pub backoff_base: Duration,
}

impl GatewayConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            timeout: Duration::from_secs(30),
            max_retries: 2,
            backoff_base: Duration::from_millis(500),
        }
    }

    /// Like [`GatewayConfig::new`], but `W4O_BACKEND_URL` wins when set.
    pub fn from_env_or(default_base_url: &str) -> Self {
        let base = std::env::var(BACKEND_URL_ENV).unwrap_or_else(|_| default_base_url.to_string());
        Self::new(base)
    }
}

fn build_agent(config: &GatewayConfig) -> Agent {
    Agent::config_builder()
        .timeout_global(Some(config.timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

/// POSTs one request. Transport failures and 5xx replies are retried up
/// to `max_retries` times with doubling backoff; the serialized body and
/// the `X-Request-Id` header are byte-identical across attempts. 4xx
/// replies are not retried.
pub fn call(
    config: &GatewayConfig,
    request: &BackendRequest,
) -> Result<serde_json::Value, GatewayError> {
    let body = serde_json::to_vec(&request.payload).expect("JSON value serializes");
    let url = format!(
        "{}{}",
        config.base_url.trim_end_matches('/'),
        request.kind.route()
    );
    let agent = build_agent(config);

    let attempts = config.max_retries + 1;
    let mut last_failure = String::from("no attempt made");
    let mut last_was_timeout = false;
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(config.backoff_base * (1 << (attempt - 1)));
        }
        let sent = agent
            .post(url.as_str())
            .header("X-Request-Id", request.request_id.as_str())
            .content_type("application/json")
            .send(&body[..]);
        match sent {
            Ok(mut response) => {
                let status = response.status().as_u16();
                let text = response.body_mut().read_to_string().unwrap_or_default();
                if (200..300).contains(&status) {
                    return serde_json::from_str(&text).map_err(|e| {
                        GatewayError::MalformedResponse(format!("reply is not JSON: {e}"))
                    });
                }
                if (400..500).contains(&status) {
                    return Err(GatewayError::RemoteError {
                        status,
                        message: text,
                    });
                }
                last_failure = format!("status {status}");
                last_was_timeout = false;
            }
            Err(e) => {
                last_was_timeout = matches!(e, ureq::Error::Timeout(_));
                last_failure = e.to_string();
            }
        }
    }
    if last_was_timeout {
        Err(GatewayError::Timeout {
            seconds: config.timeout.as_secs_f64(),
        })
    } else {
        Err(GatewayError::RetriesExhausted {
            attempts,
            last: last_failure,
        })
    }
}

/// All five model slots speaking the wire protocol against one base URL.
/// Optional single-flight mode serializes calls for remotes that cannot
/// take concurrent traffic.
pub struct RemoteBackend {
    config: GatewayConfig,
    flight: Option<Mutex<()>>,
}

impl RemoteBackend {
    pub fn new(config: GatewayConfig) -> Self {
        Self {
            config,
            flight: None,
        }
    }

    pub fn single_flight(config: GatewayConfig) -> Self {
        Self {
            config,
            flight: Some(Mutex::new(())),
        }
    }

    fn call_typed<R: DeserializeOwned>(
        &self,
        kind: RequestKind,
        payload: impl serde::Serialize,
    ) -> Result<R, GatewayError> {
        let _guard = self.flight.as_ref().map(|m| m.lock().unwrap());
        let payload = serde_json::to_value(payload).expect("payload serializes");
        let request = BackendRequest::new(kind, payload);
        let doc = call(&self.config, &request)?;
        serde_json::from_value(doc).map_err(|e| {
            GatewayError::MalformedResponse(format!("{} reply: {e}", kind.route()))
        })
    }
}

impl PlannerBackend for RemoteBackend {
    fn plan(&self, task: &str, image: &RgbImage) -> Result<PlanResponse, BackendError> {
        let reply: PlanReply = self.call_typed(
            RequestKind::Plan,
            PlanPayload {
                task: task.to_string(),
                image_png_b64: encode_image(image),
            },
        )?;
        Ok(PlanResponse {
            subtasks: reply.subtasks,
            targets: reply.targets,
        })
    }
}

impl DreamerBackend for RemoteBackend {
    fn dream(&self, image: &RgbImage, prompt: &str) -> Result<RgbImage, BackendError> {
        let reply: DreamReply = self.call_typed(
            RequestKind::Dream,
            DreamPayload {
                image_png_b64: encode_image(image),
                prompt: prompt.to_string(),
            },
        )?;
        Ok(decode_image(&reply.image_png_b64)?)
    }
}

impl CriticBackend for RemoteBackend {
    fn critique(
        &self,
        image: &RgbImage,
        candidate: &RgbImage,
        subtask: &str,
    ) -> Result<ReflectionVerdict, BackendError> {
        let reply: CritiqueReply = self.call_typed(
            RequestKind::Critique,
            CritiquePayload {
                image_before_b64: encode_image(image),
                image_after_b64: encode_image(candidate),
                subtask: subtask.to_string(),
            },
        )?;
        Ok(verdict_from_reply(reply)?)
    }
}

impl DepthBackend for RemoteBackend {
    fn estimate_depth(&self, image: &RgbImage) -> Result<DepthMap, BackendError> {
        let reply: DepthReply = self.call_typed(
            RequestKind::Depth,
            DepthPayload {
                image_png_b64: encode_image(image),
            },
        )?;
        Ok(decode_depth(&reply)?)
    }
}

impl SegmenterBackend for RemoteBackend {
    fn segment(&self, image: &RgbImage, label: &str) -> Result<PixelMask, BackendError> {
        let reply: SegmentReply = self.call_typed(
            RequestKind::Segment,
            SegmentPayload {
                image_png_b64: encode_image(image),
                label: label.to_string(),
            },
        )?;
        Ok(decode_mask(&reply.mask_png_b64)?)
    }
}

/// Five remote slots sharing one config.
pub fn remote_suite(config: GatewayConfig) -> BackendSuite {
    let backend = Arc::new(RemoteBackend::new(config));
    BackendSuite {
        planner: backend.clone(),
        dreamer: backend.clone(),
        critic: backend.clone(),
        depth: backend.clone(),
        segmenter: backend,
    }
}
