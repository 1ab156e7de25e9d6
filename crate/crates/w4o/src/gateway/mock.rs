use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use super::wire::RequestKind;
use super::GatewayError;

/// What the mock server does for one scripted call slot.
#[derive(Debug, Clone)]
pub enum ScriptedReply {
    /// 200 with this JSON document.
    Respond(serde_json::Value),
    /// This HTTP error status with a short text body.
    Fail(u16),
    /// Close the connection without writing a response.
    Drop,
    /// Wait before answering 200, to trip per-attempt client timeouts.
    Stall(Duration),
}

/// Per-kind reply sequences: the n-th request of a kind gets entry n.
/// Requests past the end of a sequence get a 400.
#[derive(Debug, Clone, Default)]
pub struct MockScript {
    entries: HashMap<RequestKind, Vec<ScriptedReply>>,
}

impl MockScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on(mut self, kind: RequestKind, replies: impl IntoIterator<Item = ScriptedReply>) -> Self {
        self.entries
            .entry(kind)
            .or_default()
            .extend(replies);
        self
    }
}

/// One request as the server saw it, recorded before any reply is sent.
#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub kind: RequestKind,
    pub request_id: String,
    pub raw_body: Vec<u8>,
    pub body: serde_json::Value,
}

/// Running mock server. Dropping the handle shuts the server down.
#[derive(Debug)]
pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<Mutex<Vec<RecordedRequest>>>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // A throwaway connection unblocks the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.thread.take() {
            let _ = handle.join();
        }
    }
}

/// Starts the scripted server on localhost. Port 0 picks a free port.
pub fn serve_mock(script: MockScript, port: u16) -> Result<MockServer, GatewayError> {
    let listener = TcpListener::bind(("127.0.0.1", port)).map_err(|source| {
        GatewayError::PortUnavailable { port, source }
    })?;
    let addr = listener.local_addr().expect("bound listener has an address");
    let requests = Arc::new(Mutex::new(Vec::new()));
    let stop = Arc::new(AtomicBool::new(false));

    let thread_requests = Arc::clone(&requests);
    let thread_stop = Arc::clone(&stop);
    let thread = std::thread::spawn(move || {
        let mut counters: HashMap<RequestKind, usize> = HashMap::new();
        for stream in listener.incoming() {
            if thread_stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            // Connections are handled to completion in arrival order, so
            // the request log is totally ordered.
            let _ = handle_connection(stream, &script, &mut counters, &thread_requests);
        }
    });

    Ok(MockServer {
        addr,
        requests,
        stop,
        thread: Some(thread),
    })
}

fn handle_connection(
    stream: TcpStream,
    script: &MockScript,
    counters: &mut HashMap<RequestKind, usize>,
    requests: &Mutex<Vec<RecordedRequest>>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream);

    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or_default().to_string();

    let mut request_id = String::new();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            let value = value.trim();
            if name.eq_ignore_ascii_case("x-request-id") {
                request_id = value.to_string();
            } else if name.eq_ignore_ascii_case("content-length") {
                content_length = value.parse().unwrap_or(0);
            }
        }
    }
    let mut raw_body = vec![0u8; content_length];
    reader.read_exact(&mut raw_body)?;
    let mut stream = reader.into_inner();

    if method != "POST" {
        return respond(&mut stream, 405, "only POST is served");
    }
    let Some(kind) = RequestKind::from_route(&path) else {
        return respond(&mut stream, 404, "unknown route");
    };

    let body = serde_json::from_slice(&raw_body).unwrap_or(serde_json::Value::Null);
    requests.lock().unwrap().push(RecordedRequest {
        kind,
        request_id,
        raw_body,
        body,
    });

    let ordinal = counters.entry(kind).or_insert(0);
    let reply = script.entries.get(&kind).and_then(|seq| seq.get(*ordinal));
    *ordinal += 1;

    match reply {
        None => respond(
            &mut stream,
            400,
            &format!("script exhausted for {} call {}", kind.route(), ordinal),
        ),
        Some(ScriptedReply::Respond(doc)) => respond_json(&mut stream, doc),
        Some(ScriptedReply::Fail(status)) => respond(&mut stream, *status, "scripted failure"),
        Some(ScriptedReply::Drop) => Ok(()),
        Some(ScriptedReply::Stall(wait)) => {
            std::thread::sleep(*wait);
            // The client has usually hung up by now; write errors are fine.
            let _ = respond_json(&mut stream, &serde_json::json!({}));
            Ok(())
        }
    }
}

fn status_text(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        405 => "Method Not Allowed",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    }
}

fn respond(stream: &mut TcpStream, status: u16, message: &str) -> std::io::Result<()> {
    let head = format!(
        "HTTP/1.1 {status} {}\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        status_text(status),
        message.len(),
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(message.as_bytes())?;
    stream.flush()
}

fn respond_json(stream: &mut TcpStream, doc: &serde_json::Value) -> std::io::Result<()> {
    let body = serde_json::to_vec(doc).expect("JSON value serializes");
    let head = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len(),
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(&body)?;
    stream.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupied_ports_are_reported() {
        let holder = TcpListener::bind(("127.0.0.1", 0)).unwrap();
        let port = holder.local_addr().unwrap().port();
        let err = serve_mock(MockScript::new(), port).unwrap_err();
        assert!(matches!(err, GatewayError::PortUnavailable { port: p, .. } if p == port));
    }

    #[test]
    fn shutdown_on_drop_frees_the_port() {
        let server = serve_mock(MockScript::new(), 0).unwrap();
        let port = server.port();
        drop(server);
        // The accept loop has exited and released the listener.
        let rebound = TcpListener::bind(("127.0.0.1", port));
        assert!(rebound.is_ok());
    }
}
