mod common;

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbca::detailcomplete::{complete, CompleteError, Completer, CompleterKind, CompletionRequest};
use sbca::imagecore::Image;

fn request() -> CompletionRequest {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    CompletionRequest {
        painted: Image::from_fn(12, 20, |_, _| [rng.gen(), rng.gen(), rng.gen()]),
        context_text: "zebra, grass".into(),
        cycle_index: 2,
        scale: 3.0,
    }
}

fn remote(base: &str, mode: &str, timeout_ms: u64) -> CompleterKind {
    CompleterKind::Remote {
        endpoint: format!("{base}/{mode}"),
        timeout: Duration::from_millis(timeout_ms),
    }
}

#[test]
fn echo_round_trip_is_within_quantization() {
    let base = common::spawn_completion_server();
    let req = request();
    let out = complete(&req, &remote(&base, "echo", 5000)).unwrap();
    assert_eq!(out.dims(), req.painted.dims());
    for (a, b) in out.as_raw().iter().zip(req.painted.as_raw()) {
        assert!((a - b).abs() <= 1.0 / 510.0 + 1e-12);
    }
}

#[test]
fn failures_are_distinct() {
    let base = common::spawn_completion_server();
    let req = request();
    let err = complete(&req, &remote(&base, "slow", 300)).unwrap_err();
    assert!(matches!(err, CompleteError::Timeout(_)), "{err:?}");
    for mode in ["status", "nofield", "garbage"] {
        let err = complete(&req, &remote(&base, mode, 5000)).unwrap_err();
        assert!(matches!(err, CompleteError::Protocol(_)), "{mode}: {err:?}");
    }
    let err = complete(&req, &remote(&base, "shrink", 5000)).unwrap_err();
    assert!(matches!(err, CompleteError::DimensionMismatch { got_h: 1, got_w: 1, .. }), "{err:?}");

    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = complete(&req, &remote(&format!("http://127.0.0.1:{port}"), "echo", 2000)).unwrap_err();
    assert!(matches!(err, CompleteError::Connect(_)), "{err:?}");
}

#[test]
fn fallback_keeps_painted_image() {
    let base = common::spawn_completion_server();
    let req = request();
    let completer = Completer {
        kind: remote(&base, "status", 2000),
        fallback: true,
    };
    assert_eq!(completer.run(&req).unwrap(), req.painted);
}
