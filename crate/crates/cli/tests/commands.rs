use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};

const TANGENT_RADIUS: &str = "\
figure -1 -1
cycle a = (1, [0, 0], -1)
point C = (0, 0)
cycle l : tangent(a), passes_infinity, only_reals
cycle P : self_orthogonal, orthogonal(a), orthogonal(l), only_reals
cycle r : orthogonal(P), orthogonal(C), passes_infinity
";

fn cyclekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclekit")).current_dir(dir).env_remove("CYCLEKIT_PRECISION_BITS").args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write_script(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

fn saved_figure(dir: &Path) {
    write_script(dir, "build.fig", &format!("{TANGENT_RADIUS}save fig.json\n"));
    let out = cyclekit(dir, &["run", "build.fig"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
}

#[test]
fn save_load_recheck_gives_identical_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    write_script(dir.path(), "a.fig", &format!("{TANGENT_RADIUS}assert check orthogonal l r\nassert check tangent l a\nsave fig.json\n"));
    write_script(dir.path(), "b.fig", "load fig.json\nassert check orthogonal l r\nassert check tangent l a\n");
    let first = cyclekit(dir.path(), &["run", "a.fig"]);
    let second = cyclekit(dir.path(), &["run", "b.fig"]);
    assert_eq!(first.status.code(), Some(0), "{}", text(&first.stderr));
    assert_eq!(second.status.code(), Some(0), "{}", text(&second.stderr));
    let verdicts = |o: &Output| text(&o.stdout).lines().filter(|l| l.contains(" are ")).map(String::from).collect::<Vec<_>>();
    assert_eq!(verdicts(&first), verdicts(&second));
    assert!(text(&second.stdout).starts_with("loaded fig.json: 7 nodes"));
}

#[test]
fn svg_command() {
    let dir = tempfile::tempdir().unwrap();
    saved_figure(dir.path());
    let out = cyclekit(dir.path(), &["svg", "fig.json", "-o", "out.svg", "-p", "u_l=1/2"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let svg = fs::read_to_string(dir.path().join("out.svg")).unwrap();
    assert!(svg.contains("<circle") && svg.trim_end().ends_with("</svg>"));
    let again = cyclekit(dir.path(), &["svg", "fig.json", "-o", "out.svg", "-p", "u_l=1/2"]);
    assert!(again.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("out.svg")).unwrap(), svg, "rendering is idempotent");

    let missing = cyclekit(dir.path(), &["svg", "fig.json", "-o", "other.svg"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(text(&missing.stderr).contains("u_l"), "{}", text(&missing.stderr));
    assert!(!dir.path().join("other.svg").exists());
}

#[test]
fn svg_of_empty_figure() {
    let dir = tempfile::tempdir().unwrap();
    write_script(dir.path(), "e.fig", "figure -1 -1\nsave empty.json\nsvg empty.svg\n");
    let out = cyclekit(dir.path(), &["run", "e.fig"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let direct = cyclekit(dir.path(), &["svg", "empty.json", "-o", "direct.svg"]);
    assert!(direct.status.success());
    let a = fs::read_to_string(dir.path().join("empty.svg")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("direct.svg")).unwrap());
    assert!(a.starts_with("<?xml") && a.contains("background"));
}

#[test]
fn precision_bits_from_environment() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let run = |bits: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cyclekit"));
        cmd.current_dir(&golden).env_remove("CYCLEKIT_PRECISION_BITS").args(["run", "assert_unknown.fig"]);
        if let Some(b) = bits {
            cmd.env("CYCLEKIT_PRECISION_BITS", b);
        }
        cmd.output().unwrap()
    };
    assert_eq!(run(None).status.code(), Some(2));
    // enough bits to separate the line from the point
    let fine = run(Some("512"));
    assert_eq!(fine.status.code(), Some(1));
    assert!(text(&fine.stdout).contains("orthogonal: False"));
    let bad = run(Some("lots"));
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad.stderr).contains("CYCLEKIT_PRECISION_BITS"));
}

#[test]
fn seed_is_accepted_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_script(dir.path(), "s.fig", &format!("{TANGENT_RADIUS}assert check orthogonal l r\nprint\n"));
    let a = cyclekit(dir.path(), &["--seed", "42", "run", "s.fig"]);
    let b = cyclekit(dir.path(), &["run", "s.fig", "--seed", "42"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn missing_script_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cyclekit(dir.path(), &["run", "nope.fig"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("nope.fig"));
}

fn http_get(port: u16, path: &str) -> (String, String) {
    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).unwrap();
    let (head, body) = raw.split_once("\r\n\r\n").unwrap();
    (head.to_string(), body.to_string())
}

#[test]
fn serve_figure_file() {
    let dir = tempfile::tempdir().unwrap();
    saved_figure(dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_cyclekit"))
        .current_dir(dir.path())
        .args(["serve", "fig.json", "--port", "0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let port: u16 = line.trim().rsplit(':').next().unwrap().parse().unwrap_or_else(|_| panic!("{line}"));
    let (head, body) = http_get(port, "/figure");
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(head.starts_with("HTTP/1.1 200"), "{head}");
    // bodies are small enough that the server does not chunk them
    let doc: serde_json::Value = serde_json::from_str(&body).unwrap_or_else(|e| panic!("{e}: {body}"));
    assert_eq!(doc["nodes"].as_array().unwrap().len(), 7);
    assert_eq!(doc["revision"], 0);
}

#[test]
fn occupied_port() {
    let dir = tempfile::tempdir().unwrap();
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = cyclekit(dir.path(), &["serve", "--port", &port]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains(&format!("port {port} is already in use")), "{}", text(&out.stderr));
}
