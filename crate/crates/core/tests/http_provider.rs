//! Wire-level checks of the sidecar protocol against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use eventshot_core::model::LmParams;
use eventshot_core::providers::http::{HttpProvider, ProviderEndpoint};
use eventshot_core::providers::{Embedder, FaceDetector, LanguageModel, ModelInfo, ProviderError};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Seen {
    path: String,
    headers: Vec<(String, String)>,
    body: Value,
}

impl Seen {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Serves one scripted `(status, body)` reply per connection, in order.
struct Server {
    url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
    handle: Option<JoinHandle<()>>,
}

impl Server {
    fn start(replies: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        let handle = std::thread::spawn(move || {
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let path = line.split_whitespace().nth(1).unwrap_or_default().to_string();
                let mut headers = Vec::new();
                let mut len = 0usize;
                loop {
                    let mut h = String::new();
                    reader.read_line(&mut h).unwrap();
                    let h = h.trim_end();
                    if h.is_empty() {
                        break;
                    }
                    let (k, v) = h.split_once(':').unwrap();
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap();
                    }
                    headers.push((k.to_string(), v.trim().to_string()));
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push(Seen {
                    path,
                    headers,
                    body: serde_json::from_slice(&buf).unwrap_or(Value::Null),
                });
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        Self {
            url,
            seen,
            handle: Some(handle),
        }
    }

    fn finish(mut self) -> Vec<Seen> {
        self.handle.take().unwrap().join().unwrap();
        self.seen.lock().unwrap().clone()
    }
}

fn endpoint(url: &str, dim: usize) -> ProviderEndpoint {
    let mut e = ProviderEndpoint::new(
        url,
        ModelInfo {
            model_id: "test-model".into(),
            dim,
        },
    );
    e.backoff_ms = 1;
    e.timeout_s = 5.0;
    e
}

fn png(w: u32, h: u32) -> Vec<u8> {
    let img = image::RgbImage::new(w, h);
    let mut buf = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut buf), image::ImageFormat::Png)
        .unwrap();
    buf
}

#[test]
fn complete_sends_prompt_params_and_token() {
    let server = Server::start(vec![(200, json!({"text": "1. a\n"}).to_string())]);
    let var = "EVENTSHOT_TEST_TOKEN_COMPLETE";
    std::env::set_var(var, "sekret");
    let mut ep = endpoint(&server.url, 4);
    ep.auth_env = Some(var.into());
    let p = HttpProvider::new(ep).unwrap();
    let text = p.complete("List photos", &LmParams::default()).unwrap();
    assert_eq!(text, "1. a\n");
    let seen = server.finish();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].path, "/v1/complete");
    assert_eq!(seen[0].header("authorization"), Some("Bearer sekret"));
    assert_eq!(seen[0].body["prompt"], "List photos");
    assert_eq!(seen[0].body["params"]["model_id"], "text-davinci-002");
    assert_eq!(seen[0].body["params"]["temperature"], 0.7);
    assert_eq!(seen[0].body["params"]["max_tokens"], 2000);
}

#[test]
fn missing_token_fails_before_network() {
    let mut ep = endpoint("http://127.0.0.1:9", 4);
    ep.auth_env = Some("EVENTSHOT_TEST_TOKEN_NEVER_SET".into());
    let p = HttpProvider::new(ep).unwrap();
    assert_eq!(
        p.complete("x", &LmParams::default()),
        Err(ProviderError::AuthMissing {
            var: "EVENTSHOT_TEST_TOKEN_NEVER_SET".into()
        })
    );
}

#[test]
fn refused_connection_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let p = HttpProvider::new(endpoint(&format!("http://127.0.0.1:{port}"), 4)).unwrap();
    assert!(matches!(
        p.complete("x", &LmParams::default()),
        Err(ProviderError::LmUnavailable(_))
    ));
    assert!(matches!(
        p.embed_text(&["a".into()]),
        Err(ProviderError::ProviderUnavailable(_))
    ));
}

#[test]
fn server_errors_are_retried() {
    let ok = json!({"dim": 2, "vectors": [[3.0, 4.0]]}).to_string();
    let server = Server::start(vec![(503, "busy".into()), (500, "oops".into()), (200, ok)]);
    let p = HttpProvider::new(endpoint(&server.url, 2)).unwrap();
    let v = p.embed_text(&["hello".into()]).unwrap();
    assert_eq!(v[0].values(), &[3.0, 4.0]);
    assert!(!v[0].is_normalized());
    let seen = server.finish();
    assert_eq!(seen.len(), 3);
    assert!(seen.iter().all(|s| s.path == "/v1/embed/text"));
    assert_eq!(seen[0].body["texts"], json!(["hello"]));
}

#[test]
fn retries_exhaust_to_unavailable() {
    let server = Server::start(vec![(502, "a".into()), (502, "b".into()), (502, "c".into())]);
    let p = HttpProvider::new(endpoint(&server.url, 2)).unwrap();
    assert!(matches!(
        p.complete("x", &LmParams::default()),
        Err(ProviderError::LmUnavailable(_))
    ));
    assert_eq!(server.finish().len(), 3);
}

#[test]
fn client_errors_map_without_retry() {
    let server = Server::start(vec![
        (429, "slow down".into()),
        (413, "".into()),
        (422, "bad image".into()),
        (400, "nope".into()),
    ]);
    let p = HttpProvider::new(endpoint(&server.url, 2)).unwrap();
    assert!(matches!(
        p.complete("x", &LmParams::default()),
        Err(ProviderError::BudgetExceeded(_))
    ));
    assert_eq!(p.embed_image(&[png(2, 2)]), Err(ProviderError::PayloadTooLarge));
    assert!(matches!(
        p.detect_faces(&png(4, 4)),
        Err(ProviderError::UndecodableImage(_))
    ));
    assert!(matches!(
        p.embed_text(&["t".into()]),
        Err(ProviderError::Rejected { status: 400, .. })
    ));
    assert_eq!(server.finish().len(), 4);
}

#[test]
fn dim_mismatch_is_reported() {
    let server = Server::start(vec![(200, json!({"dim": 3, "vectors": [[1.0, 0.0, 0.0]]}).to_string())]);
    let p = HttpProvider::new(endpoint(&server.url, 2)).unwrap();
    assert_eq!(
        p.embed_text(&["a".into()]),
        Err(ProviderError::EmbeddingDimMismatch { expected: 2, got: 3 })
    );
    server.finish();
}

#[test]
fn image_payload_is_base64_and_boxes_are_clamped() {
    use base64::Engine;
    let image = png(20, 10);
    let boxes = json!({"boxes": [{"x": 15.5, "y": 2.0, "w": 10.0, "h": 4.2, "confidence": 0.9}]});
    let server = Server::start(vec![(200, boxes.to_string())]);
    let p = HttpProvider::new(endpoint(&server.url, 2)).unwrap();
    let faces = p.detect_faces(&image).unwrap();
    assert_eq!(faces.len(), 1);
    assert_eq!((faces[0].x, faces[0].y, faces[0].right(), faces[0].bottom()), (15, 2, 20, 7));
    let seen = server.finish();
    assert_eq!(seen[0].path, "/v1/faces");
    let sent = base64::engine::general_purpose::STANDARD
        .decode(seen[0].body["image_b64"].as_str().unwrap())
        .unwrap();
    assert_eq!(sent, image);
}

#[test]
fn undecodable_image_never_leaves_the_process() {
    let p = HttpProvider::new(endpoint("http://127.0.0.1:9", 2)).unwrap();
    assert!(matches!(
        p.detect_faces(b"not an image"),
        Err(ProviderError::UndecodableImage(_))
    ));
    assert_eq!(p.embed_text(&[]), Err(ProviderError::EmptyBatch));
}
