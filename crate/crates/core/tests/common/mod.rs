#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub fn matchalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matchalign"))
        .args(args)
        .env_remove("ALIGN_LLM_URL")
        .output()
        .expect("binary runs")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small dataset plus a few-epoch checkpoint under `dir`.
pub fn dataset_and_checkpoint(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("data");
    let heads = dir.join("heads");
    let out = matchalign(&[
        "synth",
        "--out",
        s(&data),
        "--seed",
        "3",
        "--num-matches",
        "4",
        "--num-test",
        "1",
        "--commentaries",
        "12",
        "--duration-s",
        "600",
        "--dim",
        "16",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = matchalign(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&heads),
        "--epochs",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    (data, heads.join("heads.mtac"))
}

/// Completion endpoint that answers prediction prompts with the start of
/// the first candidate bin and summarisation prompts with filler lines. Returns the URL and a request counter.
pub fn stub_endpoint() -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/complete", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let counter = counter.clone();
            std::thread::spawn(move || serve(stream, &counter));
        }
    });
    (url, hits)
}

fn serve(stream: TcpStream, hits: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    loop {
        let mut len = 0usize;
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            if line == "\r\n" {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; len];
        if reader.read_exact(&mut body).is_err() {
            return;
        }
        hits.fetch_add(1, Ordering::SeqCst);
        let req: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
        let prompt = req["prompt"].as_str().unwrap_or_default();
        let reply = serde_json::json!({ "text": answer(prompt) }).to_string();
        let head = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
            reply.len()
        );
        if writer
            .write_all(head.as_bytes())
            .and_then(|_| writer.write_all(reply.as_bytes()))
            .is_err()
        {
            return;
        }
    }
}

fn answer(prompt: &str) -> String {
    if prompt.contains("You need to summarize") {
        let n = prompt
            .split("You need to summarize ")
            .nth(1)
            .and_then(|r| r.split_whitespace().next())
            .and_then(|n| n.parse::<usize>().ok())
            .unwrap_or(1);
        return (0..n)
            .map(|i| format!("{}. play continues in midfield", i + 1))
            .collect::<Vec<_>>()
            .join("\n");
    }
    let first_bin = prompt.lines().map(str::trim).find_map(|l| {
        l.split_once("-")
            .filter(|(a, _)| a.parse::<u32>().is_ok())
            .map(|(a, _)| a.to_owned())
    });
    match first_bin {
        Some(start) => format!("The event most likely happens at {start} seconds."),
        None => "I am not sure.".into(),
    }
}
