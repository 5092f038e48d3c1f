//! Minimal single-threaded HTTP server for transport tests.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::AtomicUsize;
use std::sync::Arc;

// Each test binary compiles this module separately and uses different
// fields, so silence per-binary dead-code analysis.
#[allow(dead_code)]
pub struct Request {
    pub headers: String,
    pub body: String,
}

fn read_request(stream: &mut TcpStream) -> Request {
    let mut buffer = Vec::new();
    let mut chunk = [0u8; 1024];
    let header_end;
    loop {
        let n = stream.read(&mut chunk).expect("read request");
        buffer.extend_from_slice(&chunk[..n]);
        if let Some(pos) = buffer.windows(4).position(|w| w == b"\r\n\r\n") {
            header_end = pos + 4;
            break;
        }
        assert!(n > 0, "connection closed mid-headers");
    }
    let headers = String::from_utf8_lossy(&buffer[..header_end]).to_string();
    let content_length: usize = headers
        .lines()
        .find_map(|line| {
            line.to_ascii_lowercase()
                .strip_prefix("content-length:")
                .map(|v| v.trim().parse().expect("content length"))
        })
        .unwrap_or(0);
    while buffer.len() < header_end + content_length {
        let n = stream.read(&mut chunk).expect("read body");
        assert!(n > 0, "connection closed mid-body");
        buffer.extend_from_slice(&chunk[..n]);
    }
    Request {
        headers,
        body: String::from_utf8_lossy(&buffer[header_end..]).to_string(),
    }
}

fn write_response(stream: &mut TcpStream, status: &str, body: &str) {
    let response = format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes()).expect("write response");
}

/// Serves `plan.len()` requests, each answered by the corresponding
/// (status, body) pair, then exits, returning the requests it saw.
pub fn spawn_server(
    plan: Vec<(String, String)>,
) -> (
    String,
    Arc<AtomicUsize>,
    std::thread::JoinHandle<Vec<Request>>,
) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let hits_inner = hits.clone();
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, content) in plan {
            let (mut stream, _) = listener.accept().expect("accept");
            seen.push(read_request(&mut stream));
            hits_inner.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            write_response(&mut stream, &status, &content);
        }
        seen
    });
    (url, hits, handle)
}

/// OpenAI-style chat reply wrapper.
pub fn chat_reply(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}
