//! Premium users go to the worker with the lowest inferred cost.

use capp::capp::parse_capp;
use capp::inference::InferOptions;
use capp::rational::int;
use capp::scheduler::{Fleet, FunctionEntry, InvocationRequest, Registry, Scheduler, WorkerState};

fn run(premium_w1: i64, premium_w2: i64) {
    let mut registry = Registry::new();
    registry.insert(FunctionEntry::deploy("f1", include_str!("data/f1.msl"), None, int(128), &InferOptions::default()).unwrap());
    let fleet = Fleet::new(vec![
        WorkerState::new("W1", int(1024), 4).with_latency("PremiumService", int(premium_w1)).with_latency("BasicService", int(3)),
        WorkerState::new("W2", int(1024), 4).with_latency("PremiumService", int(premium_w2)).with_latency("BasicService", int(3)),
    ])
    .unwrap();
    let mut s = Scheduler::new(parse_capp(include_str!("data/premium.capp.yml")).unwrap(), registry, fleet, 0);
    for premium in [1, 0] {
        let d = s.decide(&InvocationRequest::new("r", "f1").bind("isPremiumUser", int(premium))).unwrap();
        println!("W1={premium_w1} W2={premium_w2} premium={premium}: {}", serde_json::to_string(&d).unwrap());
    }
}

fn main() {
    run(12, 8);
    run(8, 12);
}
