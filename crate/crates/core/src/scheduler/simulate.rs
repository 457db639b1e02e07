use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::rational::{serde_exact, Rational};

use super::{ConfigError, InvocationRequest, ScheduleDecision, ScheduleError, Scheduler};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Event {
    Schedule {
        #[serde(with = "serde_exact")]
        time_ms: Rational,
        decision: ScheduleDecision,
    },
    Completion {
        #[serde(with = "serde_exact")]
        time_ms: Rational,
        request: String,
        worker: String,
    },
}

impl Event {
    pub fn time_ms(&self) -> &Rational {
        match self {
            Event::Schedule { time_ms, .. } | Event::Completion { time_ms, .. } => time_ms,
        }
    }
}

type Pending = BinaryHeap<Reverse<(Rational, usize, String, String)>>;

fn drain(until: Option<&Rational>, pending: &mut Pending, scheduler: &mut Scheduler, log: &mut Vec<Event>) {
    while let Some(Reverse((t, ..))) = pending.peek() {
        if until.is_some_and(|u| t > u) {
            break;
        }
        let Reverse((time_ms, _, worker, request)) = pending.pop().expect("peeked");
        scheduler.complete(&worker, &request);
        log.push(Event::Completion {
            time_ms,
            request,
            worker,
        });
    }
}

/// Replays `trace` through `scheduler`. Completions due at an arrival's
/// instant are processed before it.
pub fn simulate(trace: &[InvocationRequest], scheduler: &mut Scheduler) -> Result<Vec<Event>, ScheduleError> {
    let mut log = Vec::new();
    let mut pending = Pending::new();
    for (seq, req) in trace.iter().enumerate() {
        drain(Some(&req.arrival_ms), &mut pending, scheduler, &mut log);
        let decision = scheduler.schedule(req)?;
        if let (Some(worker), Some(duration)) = (decision.chosen(), &decision.duration_ms) {
            pending.push(Reverse((&req.arrival_ms + duration, seq, worker.to_string(), req.id.clone())));
        }
        log.push(Event::Schedule {
            time_ms: req.arrival_ms.clone(),
            decision,
        });
    }
    drain(None, &mut pending, scheduler, &mut log);
    Ok(log)
}

/// Reads one request per non-empty line; arrivals must not decrease.
pub fn parse_trace(text: &str) -> Result<Vec<InvocationRequest>, ConfigError> {
    let mut out: Vec<InvocationRequest> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let req: InvocationRequest =
            serde_json::from_str(line).map_err(|e| ConfigError::Json(format!("trace line {}: {e}", k + 1)))?;
        if let Some(prev) = out.last() {
            if req.arrival_ms < prev.arrival_ms {
                return Err(ConfigError::Invalid(format!("trace line {}: arrivals out of order", k + 1)));
            }
        }
        if out.iter().any(|r| r.id == req.id) {
            return Err(ConfigError::Invalid(format!("trace line {}: duplicate request id {}", k + 1, req.id)));
        }
        out.push(req);
    }
    Ok(out)
}

/// JSON Lines, one event per line.
pub fn write_log(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capp::parse_capp;
    use crate::inference::InferOptions;
    use crate::rational::int;
    use crate::scheduler::{Fleet, FunctionEntry, Registry, WorkerState};

    fn scheduler(script: &str) -> Scheduler {
        let mut registry = Registry::new();
        registry.insert(
            FunctionEntry::deploy(
                "f1",
                "( isPremiumUser ) => { if( isPremiumUser ) { call PremiumService(1) } else { call BasicService(1) } }",
                Some("premUser"),
                int(128),
                &InferOptions::default(),
            )
            .unwrap(),
        );
        let fleet = Fleet::new(vec![
            WorkerState::new("W1", int(1024), 8)
                .with_latency("PremiumService", int(12))
                .with_latency("BasicService", int(3)),
            WorkerState::new("W2", int(1024), 8)
                .with_latency("PremiumService", int(8))
                .with_latency("BasicService", int(3)),
        ])
        .unwrap();
        Scheduler::new(parse_capp(script).unwrap(), registry, fleet, 0)
    }

    const PREMIUM: &str = "- premUser:\n  - workers:\n    - wrk: W1\n    - wrk: W2\n    strategy: min_latency\n";

    #[test]
    fn empty_trace() {
        assert!(simulate(&[], &mut scheduler(PREMIUM)).unwrap().is_empty());
    }

    #[test]
    fn single_request_completes_after_its_cost() {
        let mut s = scheduler(PREMIUM);
        let req = InvocationRequest::new("r1", "f1").bind("isPremiumUser", int(1)).at(int(5));
        let log = simulate(&[req], &mut s).unwrap();
        assert_eq!(log.len(), 2);
        assert!(matches!(&log[0], Event::Schedule { decision, .. } if decision.chosen() == Some("W2")));
        assert_eq!(
            log[1],
            Event::Completion {
                time_ms: int(13),
                request: "r1".into(),
                worker: "W2".into()
            }
        );
        assert!(s.fleet.workers.iter().all(|w| w.active.is_empty()));
    }

    #[test]
    fn concurrency_limit_pushes_second_request_away() {
        let script = "- premUser:\n  - workers:\n    - wrk: W1\n    - wrk: W2\n    strategy: min_latency\n    invalidate: max_concurrent_invocations: 1\n";
        let mut s = scheduler(script);
        let trace = [
            InvocationRequest::new("a", "f1").bind("isPremiumUser", int(1)),
            InvocationRequest::new("b", "f1").bind("isPremiumUser", int(1)),
        ];
        let log = simulate(&trace, &mut s).unwrap();
        let chosen: Vec<_> = log
            .iter()
            .filter_map(|e| match e {
                Event::Schedule { decision, .. } => decision.chosen(),
                _ => None,
            })
            .collect();
        assert_eq!(chosen, ["W2", "W1"]);
    }

    #[test]
    fn completions_precede_simultaneous_arrivals() {
        let script = "- premUser:\n  - workers:\n    - wrk: W2\n    invalidate: max_concurrent_invocations: 1\n  followup: fail\n";
        let mut s = scheduler(script);
        let trace = [
            InvocationRequest::new("a", "f1").bind("isPremiumUser", int(1)),
            InvocationRequest::new("b", "f1").bind("isPremiumUser", int(1)).at(int(8)),
        ];
        let log = simulate(&trace, &mut s).unwrap();
        assert!(matches!(&log[1], Event::Completion { request, .. } if request == "a"));
        assert!(matches!(&log[2], Event::Schedule { decision, .. } if decision.chosen() == Some("W2")));
    }

    #[test]
    fn trace_lines() {
        let t = parse_trace("{\"id\":\"a\",\"function\":\"f1\",\"arrival_ms\":1}\n\n{\"id\":\"b\",\"function\":\"f1\",\"arrival_ms\":1}\n")
            .unwrap();
        assert_eq!(t.len(), 2);
        assert!(parse_trace("{\"id\":\"a\",\"function\":\"f1\",\"arrival_ms\":2}\n{\"id\":\"b\",\"function\":\"f1\",\"arrival_ms\":1}\n").is_err());
        assert!(parse_trace("{\"id\":\"a\",\"function\":\"f1\"}\n{\"id\":\"a\",\"function\":\"f1\"}\n").is_err());
        assert!(parse_trace("not json\n").is_err());
    }

    #[test]
    fn log_lines() {
        let mut s = scheduler(PREMIUM);
        let log = simulate(&[InvocationRequest::new("r1", "f1").bind("isPremiumUser", int(0))], &mut s).unwrap();
        let text = write_log(&log);
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with(r#"{"event":"completion","time_ms":3,"#));
    }
}
