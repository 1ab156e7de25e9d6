//! Remote wire protocol for the five model slots: one JSON POST route
//! per slot, idempotent retries keyed by a client-minted request id, and
//! a scripted localhost mock server for integration tests.

mod client;
mod mock;
mod wire;

pub use client::{call, remote_suite, GatewayConfig, RemoteBackend, BACKEND_URL_ENV};
pub use mock::{serve_mock, MockScript, MockServer, RecordedRequest, ScriptedReply};
pub use wire::{
    decode_depth, decode_image, decode_mask, encode_depth, encode_image, encode_mask,
    reply_from_verdict, verdict_from_reply, BackendRequest, CritiquePayload, CritiqueReply,
    Decision, DepthPayload, DepthReply, DreamPayload, DreamReply, PlanPayload, PlanReply,
    RequestKind, SegmentPayload, SegmentReply,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("request timed out after {seconds} s")]
    Timeout { seconds: f64 },
    #[error("retries exhausted after {attempts} attempts, last failure: {last}")]
    RetriesExhausted { attempts: usize, last: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("remote error {status}: {message}")]
    RemoteError { status: u16, message: String },
    #[error("cannot bind mock server to port {port}: {source}")]
    PortUnavailable {
        port: u16,
        #[source]
        source: std::io::Error,
    },
}
