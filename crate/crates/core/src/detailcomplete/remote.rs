use std::io;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{CompleteError, CompletionRequest, Result};
use crate::imagecore::{from_png_bytes, to_png_bytes, Image};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompleteRequestBody {
    pub image_png_b64: String,
    pub context_text: String,
    pub cycle_index: usize,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompleteResponseBody {
    pub image_png_b64: String,
}

impl CompleteRequestBody {
    pub fn from_request(request: &CompletionRequest) -> Result<Self> {
        Ok(Self {
            image_png_b64: STANDARD.encode(to_png_bytes(&request.painted)),
            context_text: request.context_text.clone(),
            cycle_index: request.cycle_index,
            scale: request.scale,
        })
    }
}

fn has_timeout(err: &(dyn std::error::Error + 'static)) -> bool {
    let mut cur = Some(err);
    while let Some(e) = cur {
        if let Some(io) = e.downcast_ref::<io::Error>() {
            if matches!(io.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock) {
                return true;
            }
        }
        cur = e.source();
    }
    false
}

fn map_ureq(err: ureq::Error) -> CompleteError {
    match err {
        ureq::Error::Status(code, _) => CompleteError::Protocol(format!("HTTP status {code}")),
        ureq::Error::Transport(t) => {
            let msg = t.to_string();
            if has_timeout(&t) {
                return CompleteError::Timeout(msg);
            }
            match t.kind() {
                ureq::ErrorKind::ConnectionFailed | ureq::ErrorKind::Dns => CompleteError::Connect(msg),
                ureq::ErrorKind::InvalidUrl | ureq::ErrorKind::UnknownScheme => CompleteError::Connect(msg),
                _ => CompleteError::Protocol(msg),
            }
        }
    }
}

fn map_io(err: io::Error) -> CompleteError {
    if has_timeout(&err) {
        CompleteError::Timeout(err.to_string())
    } else {
        CompleteError::Protocol(err.to_string())
    }
}

/// `POST {endpoint}/complete` with a JSON body carrying the painted image as
/// base64 PNG; the response must carry an image of the same dimensions.
pub fn complete_remote(request: &CompletionRequest, endpoint: &str, timeout: Duration) -> Result<Image> {
    let body = CompleteRequestBody::from_request(request)?;
    let url = format!("{}/complete", endpoint.trim_end_matches('/'));
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let json = serde_json::to_string(&body).map_err(|e| CompleteError::Protocol(e.to_string()))?;
    let response = agent
        .post(&url)
        .set("Content-Type", "application/json")
        .send_string(&json)
        .map_err(map_ureq)?;
    if response.status() != 200 {
        return Err(CompleteError::Protocol(format!("HTTP status {}", response.status())));
    }
    let text = response.into_string().map_err(map_io)?;
    let parsed: CompleteResponseBody =
        serde_json::from_str(&text).map_err(|e| CompleteError::Protocol(format!("bad response body: {e}")))?;
    let bytes = STANDARD
        .decode(parsed.image_png_b64.as_bytes())
        .map_err(|e| CompleteError::Protocol(format!("bad base64: {e}")))?;
    let image = from_png_bytes(&bytes).map_err(|e| CompleteError::Protocol(format!("bad PNG: {e}")))?;
    let (h, w) = request.painted.dims();
    let (got_h, got_w) = image.dims();
    if (got_h, got_w) != (h, w) {
        return Err(CompleteError::DimensionMismatch { h, w, got_h, got_w });
    }
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_body_field_names() {
        let req = CompletionRequest {
            painted: Image::filled(2, 3, [1.0, 0.0, 0.5]),
            context_text: "sky".into(),
            cycle_index: 2,
            scale: 1.5,
        };
        let body = CompleteRequestBody::from_request(&req).unwrap();
        let v = serde_json::to_value(&body).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in ["image_png_b64", "context_text", "cycle_index", "scale"] {
            assert!(keys.contains(&k));
        }
        let png = STANDARD.decode(body.image_png_b64).unwrap();
        assert_eq!(from_png_bytes(&png).unwrap().dims(), (2, 3));
    }

    #[test]
    fn refused_connection_is_connect_error() {
        let req = CompletionRequest {
            painted: Image::black(2, 2),
            context_text: String::new(),
            cycle_index: 1,
            scale: 2.0,
        };
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        drop(listener);
        let err = complete_remote(&req, &format!("http://127.0.0.1:{port}"), Duration::from_secs(2)).unwrap_err();
        assert!(matches!(err, CompleteError::Connect(_)), "{err:?}");
    }
}
