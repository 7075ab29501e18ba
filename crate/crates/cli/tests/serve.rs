use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};

use procmine::corpus::load_document;
use procmine::flow::{mine_procedure, FlowConfig, FlowDocument, Procedure};
use procmine::ingest::{extract_list_candidates, ListKind};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

/// First ordered list of a page, mined into a flow file named `{id}.flow.json`.
fn write_flow(page: &str, id: &str, dir: &Path) -> Vec<u8> {
    let doc = load_document(&fixture(page), page).unwrap();
    let cand = extract_list_candidates(&doc, 1)
        .into_iter()
        .find(|c| c.list_kind == ListKind::Ordered)
        .unwrap();
    let p = Procedure::from_candidate(&cand, &doc.title);
    let mined = mine_procedure(&p, &FlowConfig::default()).unwrap();
    let bytes = FlowDocument::new(&p, &mined.graph).to_json().unwrap().into_bytes();
    std::fs::write(dir.join(format!("{id}.flow.json")), &bytes).unwrap();
    bytes
}

struct Server {
    addr: SocketAddr,
    _rt: tokio::runtime::Runtime,
}

fn start(flows: &Path, ui: Option<&Path>) -> Server {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    std_listener.set_nonblocking(true).unwrap();
    let addr = std_listener.local_addr().unwrap();
    let (flows, ui) = (flows.to_path_buf(), ui.map(Path::to_path_buf));
    rt.spawn(async move {
        let listener = tokio::net::TcpListener::from_std(std_listener).unwrap();
        procmine_cli::serve::serve(listener, flows, ui).await.unwrap();
    });
    Server { addr, _rt: rt }
}

struct Response {
    status: u16,
    headers: Vec<(String, String)>,
    body: Vec<u8>,
}

impl Response {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

fn get(s: &Server, path: &str, extra: &str) -> Response {
    let mut stream = TcpStream::connect(s.addr).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n{extra}\r\n").unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    let head = String::from_utf8(raw[..split].to_vec()).unwrap();
    let mut lines = head.lines();
    let status = lines.next().unwrap().split(' ').nth(1).unwrap().parse().unwrap();
    let headers: Vec<(String, String)> = lines
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let body = raw[split + 4..].to_vec();
    let resp = Response { status, headers, body };
    assert_ne!(resp.header("transfer-encoding"), Some("chunked"));
    resp
}

fn flows_dir() -> (tempfile::TempDir, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let fig = write_flow("fig1a.html", "fig1a-p0", dir.path());
    write_flow("blocks/fan.html", "fan-p0", dir.path());
    std::fs::write(dir.path().join("notes.txt"), "not a flow").unwrap();
    (dir, fig)
}

#[test]
fn lists_procedures_sorted_by_id() {
    let (dir, _) = flows_dir();
    let s = start(dir.path(), None);
    let r = get(&s, "/api/procedures", "");
    assert_eq!(r.status, 200);
    assert!(r.header("content-type").unwrap().starts_with("application/json"));
    let list = r.json();
    let list = list.as_array().unwrap();
    assert_eq!(list.len(), 2);
    assert_eq!(list[0]["id"], "fan-p0");
    assert_eq!(list[1]["id"], "fig1a-p0");
    assert_eq!(list[1]["title"], "Node error 561");
    assert_eq!(list[1]["source"]["url"], "fig1a.html");
}

#[test]
fn flow_body_is_the_file_verbatim() {
    let (dir, fig) = flows_dir();
    let s = start(dir.path(), None);
    let r = get(&s, "/api/procedures/fig1a-p0/flow", "");
    assert_eq!(r.status, 200);
    assert_eq!(r.header("content-type"), Some("application/json"));
    assert_eq!(r.body, fig);
    let doc = FlowDocument::from_json(std::str::from_utf8(&r.body).unwrap()).unwrap();
    assert_eq!(doc.entry.as_deref(), Some("n0"));
}

#[test]
fn unknown_ids_and_routes_are_json_404s() {
    let (dir, _) = flows_dir();
    let s = start(dir.path(), None);
    for path in ["/api/procedures/nope/flow", "/api/procedures/..%2Ffig1a-p0/flow", "/api/procedures/.hidden/flow", "/elsewhere"] {
        let r = get(&s, path, "");
        assert_eq!(r.status, 404, "{path}");
        assert_eq!(r.json(), serde_json::json!({ "error": "not_found" }), "{path}");
    }
}

#[test]
fn unreadable_flow_is_500_and_skipped_in_listing() {
    let (dir, _) = flows_dir();
    std::fs::create_dir(dir.path().join("x.flow.json")).unwrap();
    std::fs::write(dir.path().join("broken.flow.json"), "{").unwrap();
    let s = start(dir.path(), None);
    let r = get(&s, "/api/procedures/x/flow", "");
    assert_eq!(r.status, 500);
    assert_eq!(r.json(), serde_json::json!({ "error": "unreadable" }));
    let ids: Vec<String> = get(&s, "/api/procedures", "")
        .json()
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, vec!["fan-p0", "fig1a-p0"]);
}

#[test]
fn cross_origin_requests_are_allowed() {
    let (dir, _) = flows_dir();
    let s = start(dir.path(), None);
    let r = get(&s, "/api/procedures", "Origin: http://localhost:5173\r\n");
    assert_eq!(r.status, 200);
    assert!(r.header("access-control-allow-origin").is_some());
}

#[test]
fn restart_serves_identical_responses() {
    let (dir, _) = flows_dir();
    let paths = ["/api/procedures", "/api/procedures/fig1a-p0/flow", "/api/procedures/fan-p0/flow", "/api/procedures/nope/flow"];
    let first: Vec<(u16, Vec<u8>)> = {
        let s = start(dir.path(), None);
        paths.iter().map(|p| get(&s, p, "")).map(|r| (r.status, r.body)).collect()
    };
    let s = start(dir.path(), None);
    let second: Vec<(u16, Vec<u8>)> = paths.iter().map(|p| get(&s, p, "")).map(|r| (r.status, r.body)).collect();
    assert_eq!(first, second);
}

#[test]
fn ui_directory_is_served_at_root() {
    let (dir, _) = flows_dir();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<h1>walkthrough</h1>").unwrap();
    let s = start(dir.path(), Some(ui.path()));
    let r = get(&s, "/", "");
    assert_eq!(r.status, 200);
    assert_eq!(r.body, b"<h1>walkthrough</h1>");
    assert_eq!(get(&s, "/api/procedures", "").status, 200);
}
