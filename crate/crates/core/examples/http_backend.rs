//! Search against an OpenAI-style completions endpoint. Without an argument a
//! local stub server stands in for the model; pass a URL to use a real one
//! (the bearer token is read from DISC_API_KEY).
//!
//! cargo run --example http_backend -- [endpoint_url] [model]

use disc::backends::stub_server::{StubReply, StubServer};
use disc::backends::{HttpConfig, HttpGenerationBackend, VerifierReward, VerifierSpec};
use disc::engine::{greedy_disc, EngineConfig};
use disc::problem::Problem;
use disc::seq::TextSeq;
use serde_json::json;

fn main() -> disc::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let stub;
    let url = match args.next() {
        Some(u) => u,
        None => {
            // answers correctly only once the prompt already holds "The answer"
            stub = StubServer::with_handler(|req| {
                let prompt = req["prompt"].as_str().unwrap_or("");
                let seed = req["seed"].as_u64().unwrap_or(0);
                let text = if prompt.contains("The answer") {
                    " is 12.".to_string()
                } else {
                    format!(" The answer is {}.", 10 + seed % 4)
                };
                StubReply::json(200, json!({"choices": [{"text": text}], "usage": {"completion_tokens": 5}}))
            });
            stub.url()
        }
    };
    let model = args.next().unwrap_or_else(|| "default".into());
    let backend = HttpGenerationBackend::new(HttpConfig { endpoint_url: url, model, ..HttpConfig::default() })?;
    let problem = Problem::new(
        "dozen",
        TextSeq::tokens("How many eggs are in a dozen?"),
        Some(VerifierSpec::NumericMatch { target: 12.0, tolerance: 1e-6 }),
    )?;
    let cfg = EngineConfig { budget_samples: 20, ..EngineConfig::default() };
    let d = greedy_disc(&problem, &backend, &VerifierReward, &cfg)?;
    for s in &d.generated_solutions {
        println!("#{:<2} reward {:.0} {:?}", s.index, s.reward, s.solution().as_str());
    }
    println!("solved: {}, retries: {}", d.solved, backend.retry_count());
    Ok(())
}
