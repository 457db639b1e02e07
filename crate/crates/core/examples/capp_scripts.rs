//! Parse, print and validate cAPP scripts.

use capp::capp::{parse_capp, validate};
use capp::inference::InferOptions;
use capp::scheduler::{Fleet, Registry};

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let fleet = Fleet::from_json(include_str!("data/fleet.json")).unwrap();
    let registry = Registry::load(&dir.join("registry.json"), &InferOptions::default()).unwrap();

    let script = parse_capp(include_str!("data/deployment.capp.yml")).unwrap();
    println!("canonical form:\n{script}");
    println!("diagnostics: {:?}", validate(&script, &fleet.labels(), &registry.tags()));

    let bad = parse_capp("- premUser:\n  - workers:\n    - wrk: W9\n    strategy: min_latency\n").unwrap();
    for d in validate(&bad, &fleet.labels(), &registry.tags()) {
        println!("{}", d.to_json());
    }

    for text in ["- premUser:\n  - workers: *\n    strategy: fastest\n", "- t:\n  - workers: *\n    invalidate:\n      capacity_used: 120%\n"] {
        println!("{}", parse_capp(text).unwrap_err());
    }
}
