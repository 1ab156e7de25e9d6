//! Talks to a scripted localhost backend over the wire protocol,
//! demonstrating bit-exact image transport and idempotent retries.

use w4o::gateway::{
    encode_image, remote_suite, serve_mock, DreamReply, GatewayConfig, MockScript, RequestKind,
    ScriptedReply,
};
use w4o::scene::{default_camera, render, sample_layout};

fn main() {
    let scene = sample_layout("pick-place", 6).unwrap();
    let camera = default_camera("pick-place").unwrap();
    let frame = render(&scene, &camera).image;

    let reply = serde_json::to_value(DreamReply {
        image_png_b64: encode_image(&frame),
    })
    .unwrap();
    let script = MockScript::new().on(
        RequestKind::Dream,
        [
            ScriptedReply::Fail(503),
            ScriptedReply::Respond(reply),
        ],
    );
    let server = serve_mock(script, 0).unwrap();
    println!("mock backend on {}", server.url());

    let suite = remote_suite(GatewayConfig::new(server.url()));
    let returned = suite.dreamer.dream(&frame, "hold still").unwrap();
    assert_eq!(returned.raw_bytes(), frame.raw_bytes());
    println!("dream round trip bit-exact ({}x{})", returned.width(), returned.height());

    let log = server.requests();
    println!("{} requests hit the server:", log.len());
    for r in &log {
        println!("  {:?} id={} body={} bytes", r.kind, r.request_id, r.raw_body.len());
    }
    assert_eq!(log[0].request_id, log[1].request_id);
    assert_eq!(log[0].raw_body, log[1].raw_body);
    println!("retry after the 503 reused the request id and an identical body");
}
