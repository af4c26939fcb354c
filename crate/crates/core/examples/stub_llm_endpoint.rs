//! Runs the LLM coarse mode against a local stand-in endpoint.
//!
//! The stand-in speaks the completion wire format (`{"prompt"}` in,
//! `{"text"}` out). It echoes bin text back as the "summary" and answers a
//! prediction prompt with the candidate bin sharing most words with the
//! commentary. Point `--llm-url` of the CLI at a real service instead.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};

use matchalign::coarse::{CoarseConfig, CoarseMode, HttpLlmClient, LlmClient, LlmEndpointConfig};
use matchalign::model::compute_offset_stats;
use matchalign::realign::{pipeline_align, RealignConfig};
use matchalign::synth::{load_split, write_dataset, Split, SynthConfig};

fn words(s: &str) -> HashSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.len() > 2)
        .map(str::to_lowercase)
        .collect()
}

fn bin_line(l: &str) -> Option<(&str, &str)> {
    let (range, text) = l.trim().split_once("s:")?;
    let (start, end) = range.split_once('-')?;
    let text = match text.trim() {
        "" => "quiet spell",
        t => t,
    };
    (start.parse::<f64>().is_ok() && end.parse::<f64>().is_ok()).then_some((start, text))
}

fn answer(prompt: &str) -> String {
    let lines: Vec<&str> = prompt.lines().collect();
    if prompt.contains("You need to summarize") {
        return lines
            .iter()
            .filter_map(|l| bin_line(l))
            .map(|(_, t)| t)
            .collect::<Vec<_>>()
            .join("\n");
    }
    let commentary = lines
        .iter()
        .find_map(|l| {
            l.trim()
                .split_once("s: ")
                .filter(|(t, _)| t.parse::<f64>().is_ok())
                .map(|x| x.1)
        })
        .unwrap_or_default();
    let query = words(commentary);
    let best = lines
        .iter()
        .skip_while(|l| !l.contains("following events"))
        .filter_map(|l| bin_line(l))
        .max_by_key(|(_, text)| words(text).intersection(&query).count());
    match best {
        Some((start, _)) => start.to_string(),
        None => "no idea".into(),
    }
}

fn serve(stream: TcpStream) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    loop {
        let (mut line, mut len) = (String::new(), 0usize);
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
        let req: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
        let reply =
            serde_json::json!({ "text": answer(req["prompt"].as_str().unwrap_or_default()) })
                .to_string();
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

fn main() -> matchalign::Result<()> {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let url = format!("http://{}/complete", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for s in listener.incoming().flatten() {
            std::thread::spawn(move || serve(s));
        }
    });

    let dir = tempfile::tempdir().expect("tempdir");
    write_dataset(
        dir.path(),
        &SynthConfig {
            num_matches: 1,
            num_test: 0,
            commentaries_per_match: 20,
            d: 32,
            ..Default::default()
        },
    )?;
    let record = load_split(dir.path(), Split::Train)?.remove(0);
    let train_cfg = matchalign::aligner::TrainConfig {
        epochs: 2,
        ..Default::default()
    };
    let heads = matchalign::aligner::train(std::slice::from_ref(&record), &train_cfg)?.heads;
    let endpoint = LlmEndpointConfig {
        base_url: url.clone(),
        ..Default::default()
    };
    let client = HttpLlmClient::new(endpoint.clone())?;
    let coarse = CoarseConfig {
        mode: CoarseMode::Llm,
        endpoint: Some(endpoint),
        ..Default::default()
    };
    // realign window of zero width keeps the coarse estimate untouched
    let fine = RealignConfig {
        before_s: 0.0,
        after_s: 0.0,
        ..Default::default()
    };
    let report = pipeline_align(
        &record,
        &heads,
        &coarse,
        &fine,
        Some(&client as &dyn LlmClient),
    )?;

    let gt = record.ground_truth()?;
    let before: Vec<f64> = record.commentaries.iter().map(|c| c.t).collect();
    for (name, t) in [("input", before), ("llm coarse", report.centers())] {
        let s = compute_offset_stats(&t, &gt, &[10.0])?;
        println!(
            "{name:<11} avg |Δ| {:>6.2}s  within 10s {:>5.1}%",
            s.avg_abs_delta,
            s.coverage(10.0).unwrap()
        );
    }
    println!(
        "stage: {}, warnings: {}",
        report.coarse_stage,
        report.warnings.len()
    );
    for w in report.warnings.iter().take(5) {
        println!("{w}");
    }
    Ok(())
}
