//! Replay the bundled trace against the bundled deployment.

use capp::capp::parse_capp;
use capp::inference::InferOptions;
use capp::scheduler::{parse_trace, simulate, write_log, Fleet, Registry, Scheduler};

fn main() {
    let seed = std::env::args().nth(1).map(|s| s.parse().expect("seed is a number")).unwrap_or(0);
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let fleet = Fleet::from_json(include_str!("data/fleet.json")).unwrap();
    let registry = Registry::load(&dir.join("registry.json"), &InferOptions::default()).unwrap();
    let script = parse_capp(include_str!("data/deployment.capp.yml")).unwrap();
    let trace = parse_trace(include_str!("data/trace.jsonl")).unwrap();
    let mut s = Scheduler::new(script, registry, fleet, seed);
    print!("{}", write_log(&simulate(&trace, &mut s).unwrap()));
}
