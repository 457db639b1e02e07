//! Map/reduce jobs are refused when their cost exceeds the latency budget.

use capp::capp::parse_capp;
use capp::inference::InferOptions;
use capp::rational::int;
use capp::scheduler::{worker_cost, Fleet, FunctionEntry, InvocationRequest, Registry, Scheduler, WorkerState};

fn main() {
    let entry =
        FunctionEntry::deploy("mapReduce", include_str!("data/map_reduce.msl"), None, int(512), &InferOptions::default())
            .unwrap();
    let mut registry = Registry::new();
    registry.insert(entry.clone());
    let fleet = Fleet::new(vec![
        WorkerState::new("W1", int(2048), 4).with_latency("Map", int(10)).with_latency("Reduce", int(1)),
        WorkerState::new("W2", int(2048), 4).with_latency("Map", int(20)).with_latency("Reduce", int(2)),
    ])
    .unwrap();
    let script = format!("{}  followup: fail\n", include_str!("data/map_reduce.capp.yml"));
    let mut s = Scheduler::new(parse_capp(&script).unwrap(), registry, fleet, 0);
    for (m, r) in [(2, 3), (10, 10), (10, 30)] {
        let req = InvocationRequest::new("job", "mapReduce").bind("m", int(m)).bind("r", int(r));
        let costs: Vec<String> = s
            .fleet
            .workers
            .iter()
            .map(|w| format!("{}={}", w.label, serde_json::to_string(&worker_cost(&entry, &req, w)).unwrap()))
            .collect();
        let d = s.decide(&req).unwrap();
        println!("m={m} r={r} costs [{}] -> {:?}", costs.join(", "), d.outcome);
    }
}
