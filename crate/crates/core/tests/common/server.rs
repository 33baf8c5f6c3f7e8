//! Minimal HTTP/1.1 server for exercising the protocol client. Serves one request per
//! connection through `wire::handle`, with scripted misbehaviour.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use augforge_core::backends::{wire, BackendService, MockBackend};

#[derive(Clone, Copy, Default)]
pub struct Script {
    /// Drop this many connections without replying before serving normally.
    pub drop_first: usize,
    /// Sleep before every reply.
    pub delay: Option<Duration>,
}

pub struct TestServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

impl TestServer {
    pub fn start(script: Script) -> Self {
        Self::with_service(script, Arc::new(MockBackend))
    }

    pub fn with_service(script: Script, service: Arc<dyn BackendService>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let count = requests.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let n = count.fetch_add(1, Ordering::SeqCst);
                let service = service.clone();
                thread::spawn(move || serve(stream, n, script, service.as_ref()));
            }
        });
        TestServer { url, requests }
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn serve(mut stream: TcpStream, n: usize, script: Script, service: &dyn BackendService) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).is_err() {
        return;
    }
    let mut parts = line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or("").to_string(), parts.next().unwrap_or("").to_string());
    let mut length = 0;
    loop {
        let mut h = String::new();
        if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    if n < script.drop_first {
        return;
    }
    if let Some(d) = script.delay {
        thread::sleep(d);
    }
    let (status, reply) = wire::handle(service, &method, &path, &String::from_utf8_lossy(&body));
    let head = format!(
        "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
        reply.len()
    );
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(reply.as_bytes());
}
