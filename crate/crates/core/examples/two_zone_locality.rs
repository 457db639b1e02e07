//! Two zones: the query function prefers the worker next to the database.

use capp::capp::parse_capp;
use capp::inference::InferOptions;
use capp::rational::int;
use capp::scheduler::{Fleet, FunctionEntry, InvocationRequest, Registry, Scheduler, WorkerState};

fn main() {
    let mut registry = Registry::new();
    registry.insert(
        FunctionEntry::deploy("db_query", include_str!("data/db_query.msl"), None, int(256), &InferOptions::default())
            .unwrap(),
    );
    let fleet = Fleet::new(vec![
        WorkerState::new("W1", int(1024), 1).with_latency("Database", int(4)),
        WorkerState::new("W2", int(1024), 4).with_latency("Database", int(9)),
    ])
    .unwrap();
    let script = parse_capp(include_str!("data/two_zone.capp.yml")).unwrap();
    let mut s = Scheduler::new(script, registry, fleet, 0);
    for id in ["q1", "q2", "q3"] {
        let d = s.schedule(&InvocationRequest::new(id, "db_query")).unwrap();
        println!("{id} -> {:?}", d.outcome);
        for step in &d.trace {
            println!("  {} block {}: order {:?}, invalidated {:?}", step.policy, step.block, step.order, step.invalidations);
        }
    }
}
