#![allow(dead_code)]

use std::thread;
use std::time::Duration;

use sbca::imagecore::{from_png_bytes, to_png_bytes, Image};
use serde_json::{json, Value};
use tiny_http::{Response, Server};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

/// Starts a loopback completion service and returns its base URL.
///
/// Behaviour is selected by the first path segment:
/// `/echo` returns the request image, `/slow` answers after 3 s,
/// `/status` answers 500, `/nofield` omits the image field, `/garbage`
/// sends invalid base64 and `/shrink` returns a 1x1 image.
pub fn spawn_completion_server() -> String {
    let server = Server::http("127.0.0.1:0").expect("bind loopback");
    let addr = server.server_addr().to_ip().expect("ip listener");
    thread::spawn(move || {
        for mut request in server.incoming_requests() {
            thread::spawn(move || {
                let mut body = String::new();
                let _ = request.as_reader().read_to_string(&mut body);
                let mode = request.url().trim_start_matches('/').split('/').next().unwrap_or("").to_string();
                let parsed: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
                let image = parsed["image_png_b64"].as_str().unwrap_or("").to_string();
                let reply = match mode.as_str() {
                    "echo" => Response::from_string(json!({ "image_png_b64": image }).to_string()),
                    "slow" => {
                        thread::sleep(Duration::from_secs(3));
                        Response::from_string(json!({ "image_png_b64": image }).to_string())
                    }
                    "status" => Response::from_string("boom").with_status_code(500),
                    "nofield" => Response::from_string(json!({ "other": 1 }).to_string()),
                    "garbage" => Response::from_string(json!({ "image_png_b64": "***" }).to_string()),
                    "shrink" => {
                        let tiny = STANDARD.encode(to_png_bytes(&Image::black(1, 1)));
                        Response::from_string(json!({ "image_png_b64": tiny }).to_string())
                    }
                    _ => Response::from_string("not found").with_status_code(404),
                };
                let _ = request.respond(reply);
            });
        }
    });
    format!("http://{addr}")
}

/// Decodes the PNG that a request body carried, for assertions on the wire format.
pub fn decode_b64_png(b64: &str) -> Image {
    from_png_bytes(&STANDARD.decode(b64).unwrap()).unwrap()
}

/// 32x32 anti-aliased disc of radius 10, interior 0.75 on a 0.25 background.
pub fn synthetic_disc() -> Image {
    Image::from_fn(32, 32, |i, j| {
        let n = 8;
        let mut inside = 0;
        for a in 0..n {
            for b in 0..n {
                let y = i as f64 + (a as f64 + 0.5) / n as f64 - 16.0;
                let x = j as f64 + (b as f64 + 0.5) / n as f64 - 16.0;
                if x * x + y * y <= 100.0 {
                    inside += 1;
                }
            }
        }
        [0.25 + 0.5 * inside as f64 / (n * n) as f64; 3]
    })
}

/// Fraction of an `h x w` pixel grid inside the disc, 16x16 samples per pixel.
pub fn supersampled_disc(cx: f64, cy: f64, r: f64, h: usize, w: usize) -> f64 {
    let n = 16;
    let mut inside = 0usize;
    for i in 0..h {
        for j in 0..w {
            for a in 0..n {
                for b in 0..n {
                    let y = i as f64 + (a as f64 + 0.5) / n as f64;
                    let x = j as f64 + (b as f64 + 0.5) / n as f64;
                    if (x - cx).powi(2) + (y - cy).powi(2) <= r * r {
                        inside += 1;
                    }
                }
            }
        }
    }
    inside as f64 / (h * w * n * n) as f64
}

/// Central finite-difference check of `Mlp::backward` in f64 on a random
/// network; returns the largest relative error over all parameters.
pub fn gradient_check(seed: u64) -> f64 {
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use sbca::mlpnet::Mlp;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.gen_range(1..=4);
    let mut dims = vec![rng.gen_range(1..=6)];
    for _ in 0..depth {
        dims.push(rng.gen_range(1..=7));
    }
    *dims.last_mut().unwrap() = rng.gen_range(1..=3);
    // Random biases keep pre-activations off the ReLU kink; zero-bias init
    // puts units fed by a fully dead layer exactly at it.
    let layers = dims
        .windows(2)
        .map(|d| sbca::mlpnet::Layer {
            weights: Array2::from_shape_fn((d[0], d[1]), |_| rng.gen_range(-1.0..1.0)),
            bias: ndarray::Array1::from_shape_fn(d[1], |_| rng.gen_range(-0.5..0.5)),
        })
        .collect();
    let model: Mlp<f64> = Mlp::from_layers(layers).unwrap();
    let batch = rng.gen_range(1..=5);
    let x = Array2::from_shape_fn((batch, dims[0]), |_| rng.gen_range(-1.0..1.0));
    let up = Array2::from_shape_fn((batch, *dims.last().unwrap()), |_| rng.gen_range(-1.0..1.0));
    let grads = model.backward(x.view(), up.view()).unwrap();

    let objective = |m: &Mlp<f64>| (m.forward(x.view()).unwrap() * &up).sum();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut compare = |analytic: f64, numeric: f64| {
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    };
    let perturbed = |k: usize, edit: &dyn Fn(&mut sbca::mlpnet::Layer<f64>)| {
        let mut layers = model.layers().to_vec();
        edit(&mut layers[k]);
        Mlp::from_layers(layers).unwrap()
    };
    for (k, layer) in model.layers().iter().enumerate() {
        for (idx, _) in layer.weights.indexed_iter() {
            let plus = perturbed(k, &|l| l.weights[idx] += h);
            let minus = perturbed(k, &|l| l.weights[idx] -= h);
            compare(grads.layers[k].weights[idx], (objective(&plus) - objective(&minus)) / (2.0 * h));
        }
        for i in 0..layer.bias.len() {
            let plus = perturbed(k, &|l| l.bias[i] += h);
            let minus = perturbed(k, &|l| l.bias[i] -= h);
            compare(grads.layers[k].bias[i], (objective(&plus) - objective(&minus)) / (2.0 * h));
        }
    }
    worst
}
