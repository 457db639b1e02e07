//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report always reaches stdout.
//! The process fails when a criterion's outcome differs from the outcome
//! recorded in `EXPECTED_FAIL`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use capp::capp::parse_capp;
use capp::cost::CostExpr;
use capp::inference::{analyze, InferOptions};
use capp::poly::Poly;
use capp::presburger::Guard;
use capp::program::CostProgram;
use capp::rational::{int, Rational};
use capp::scheduler::{
    simulate, strategy_order, worker_cost, write_log, CostValue, Fleet, FunctionEntry, InvocationRequest, Outcome,
    Registry, Scheduler, WorkerState,
};
use capp::capp::Strategy;
use capp::solver::{evaluate_concrete, export_interchange, instantiate, solve_symbolic, Binding};
use indexmap::IndexMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{box_points, if_call_is_flat, reference_cost, union, Gen};

/// Criteria whose literal statement cannot hold together with the others.
const EXPECTED_FAIL: &[&str] = &["3", "4"];

const CORPUS: u64 = 1000;
const DEPTH: u32 = 4;
const FUEL: u64 = 1_000_000;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

fn options(aliases: &[(&str, &str)]) -> InferOptions {
    InferOptions {
        aliases: aliases.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        ..InferOptions::default()
    }
}

struct Report {
    unexpected: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, title: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] {id} {title}: {detail}");
        let expected_pass = !EXPECTED_FAIL.contains(&id);
        if pass != expected_pass {
            self.unexpected.push(id.to_string());
        }
    }

    /// A supplementary check, required to pass.
    fn extra(&mut self, id: &str, title: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("  [{verdict}] {id} {title}: {detail}");
        if !pass {
            self.unexpected.push(id.to_string());
        }
    }
}

fn inference_goldens(r: &mut Report) {
    let l1 = analyze(
        &read("f1.msl"),
        "f1",
        &options(&[("isPremiumUser", "u"), ("PremiumService", "P"), ("BasicService", "B")]),
    )
    .unwrap()
    .program
    .to_string();
    let l2 = analyze(
        &read("f2.msl"),
        "f2",
        &options(&[("IsPremiumUser", "K"), ("PremiumService", "P"), ("BasicService", "B")]),
    )
    .unwrap()
    .program
    .to_string();
    let l3 = analyze(&read("map_reduce.msl"), "mapReduce", &options(&[("Map", "M"), ("Reduce", "R")]))
        .unwrap()
        .program;
    let want1 = "main(u,P,B) = if_2(u,P,B) []\nif_2(u,P,B) = P [u = 1]\nif_2(u,P,B) = B [u = 0]\n";
    let want2 = "main(K,P,B) = K + max(P, B) []\n";
    let want3 = "main(m,r,M,R) = for_2(0,m,r,M,R) []
for_2(i,m,r,M,R) = M + for_4(0,r,R) + for_2(i+1,m,r,M,R) [m >= i + 1]
for_2(i,m,r,M,R) = 0 [i >= m]
for_4(j,r,R) = R + for_4(j+1,r,R) [r >= j + 1]
for_4(j,r,R) = 0 [j >= r]
";
    let heads: BTreeSet<&str> = l3.heads().into_iter().collect();
    let ok = [l1 == want1, l2 == want2, l3.to_string() == want3 && heads == BTreeSet::from(["main", "for_2", "for_4"])];
    r.line(
        "1",
        "inference goldens (byte-identical canonical text)",
        ok.iter().all(|b| *b),
        format!("premium branch {}, premium check {}, map/reduce {} ({} equations)", ok[0], ok[1], ok[2], l3.equations.len()),
    );
}

fn same_closed_form(got: &CostExpr, want: &str) -> bool {
    Poly::from_cost(got) == Poly::from_cost(&CostExpr::parse(want).unwrap())
}

fn solver_goldens(r: &mut Report) {
    let p1: CostProgram = "main(u,P,B) = if_2(u,P,B) []\nif_2(u,P,B) = P [u = 1]\nif_2(u,P,B) = B [u = 0]\n"
        .parse()
        .unwrap();
    let bind = |pairs: &[(&str, i64)]| -> Binding { pairs.iter().map(|(k, v)| (k.to_string(), int(*v))).collect() };
    let none = solve_symbolic(&p1, &Binding::new()).unwrap();
    let u1 = solve_symbolic(&p1, &bind(&[("u", 1)])).unwrap();
    let u0 = solve_symbolic(&p1, &bind(&[("u", 0)])).unwrap();
    let p3: CostProgram = read("map_reduce.cp").parse().unwrap();
    let mr = solve_symbolic(&p3, &Binding::new()).unwrap();
    let ok = [
        same_closed_form(&none, "max(P, B)"),
        same_closed_form(&u1, "P"),
        same_closed_form(&u0, "B"),
        same_closed_form(&mr, "m * (M + r * R)"),
    ];
    r.line(
        "2",
        "solver goldens (exact, canonical normal form)",
        ok.iter().all(|b| *b),
        format!("{{}} -> {none}, u=1 -> {u1}, u=0 -> {u0}, map/reduce -> {mr}"),
    );
}

fn params_tested_by_if(p: &CostProgram, params: &Binding) -> bool {
    p.equations
        .iter()
        .filter(|e| e.head.starts_with("if_"))
        .any(|e| e.guard.vars().iter().any(|v| params.contains_key(*v)))
}

fn oracle_equivalence(r: &mut Report) {
    let mut literal_equal = 0;
    let mut unexplained = 0;
    let mut bound_equal = 0;
    let mut upper = 0;
    let mut reference_below = 0;
    let mut flat = 0;
    let mut flat_equal = 0;
    let mut errors = Vec::new();
    for seed in 0..CORPUS {
        let mut g = Gen::new(seed);
        let a = g.analysis(DEPTH);
        let params = g.params(&a);
        let latencies = g.latencies(&a);
        let full = union(&params, &latencies);
        let concrete = match evaluate_concrete(&a.program, &full, FUEL) {
            Ok(e) => e.value,
            Err(e) => {
                errors.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let int_params: BTreeMap<String, i64> = params
            .iter()
            .map(|(k, v)| (k.clone(), v.to_integer().try_into().unwrap()))
            .collect();
        let service_latency: BTreeMap<String, Rational> =
            a.env.services.iter().map(|(s, sym)| (s.clone(), latencies[sym].clone())).collect();
        let exact = reference_cost(&a.function, &int_params, &service_latency);
        if exact <= concrete {
            reference_below += 1;
        }
        if if_call_is_flat(&a.function) {
            flat += 1;
            if exact == concrete {
                flat_equal += 1;
            }
        }
        match solve_symbolic(&a.program, &Binding::new()) {
            Ok(c) => {
                let v = instantiate(&c, &full).value().cloned();
                if v.as_ref() == Some(&concrete) {
                    literal_equal += 1;
                } else if !params_tested_by_if(&a.program, &params) {
                    unexplained += 1;
                }
                if v.is_some_and(|v| v >= concrete) {
                    upper += 1;
                }
            }
            Err(e) => errors.push(format!("seed {seed}: {e}")),
        }
        match solve_symbolic(&a.program, &params) {
            Ok(c) if instantiate(&c, &latencies).value() == Some(&concrete) => bound_equal += 1,
            Ok(_) => {}
            Err(e) => errors.push(format!("seed {seed} (bound): {e}")),
        }
    }
    let n = CORPUS as usize;
    r.line(
        "3",
        "oracle equivalence, instantiate(solve_symbolic(p, {}), b) = evaluate_concrete(p, b) (exact)",
        literal_equal == n,
        format!(
            "{literal_equal}/{n} equal; the {} others all test a parameter in an if guard ({unexplained} unexplained), \
             where the unbound solution must be the max over both branches",
            n - literal_equal
        ),
    );
    r.extra(
        "3a",
        "parameters bound at solve time, instantiate(solve_symbolic(p, params), latencies) = evaluate_concrete(p, b)",
        bound_equal == n && errors.is_empty(),
        format!("{bound_equal}/{n} equal, {} solver errors", errors.len()),
    );
    r.extra(
        "3b",
        "unbound solution is an upper bound, instantiate(solve_symbolic(p, {}), b) >= evaluate_concrete(p, b)",
        upper == n,
        format!("{upper}/{n}"),
    );
    r.extra(
        "3c",
        "evaluate_concrete against a direct interpreter of the source: never below it, equal without nested if-call branches",
        reference_below == n && flat_equal == flat,
        format!("{reference_below}/{n} not below, {flat_equal}/{flat} equal"),
    );
    for e in errors.iter().take(5) {
        println!("    {e}");
    }
}

fn partition_holds(phi: &Guard, negations: &[Guard], point: &BTreeMap<String, i64>) -> bool {
    let value = |v: &str| point.get(v).map(|x| int(*x));
    let yes = phi.holds(&value).unwrap();
    let no = negations.iter().any(|g| g.holds(&value).unwrap());
    yes != no
}

fn guard_partition(r: &mut Report) {
    let mut pairs = 0;
    let mut points = 0;
    let mut violations = 0;
    let mut violating_pairs_boolean = 0;
    let mut violating_pairs = 0;
    let mut typed_violations = 0;
    for seed in 0..CORPUS {
        let a = Gen::new(seed).analysis(DEPTH);
        let heads: BTreeSet<&str> = a.program.heads().into_iter().filter(|h| h.starts_with("if_")).collect();
        for head in heads {
            let eqs: Vec<_> = a.program.equations_for(head).collect();
            let phi = &eqs[0].guard;
            let negations: Vec<Guard> = eqs[1..].iter().map(|e| e.guard.clone()).collect();
            let mut names: BTreeSet<String> = phi.vars().iter().map(|s| s.to_string()).collect();
            for g in &negations {
                names.extend(g.vars().iter().map(|s| s.to_string()));
            }
            let names: Vec<String> = names.into_iter().collect();
            pairs += 1;
            let mut bad = 0;
            for p in box_points(&names, -3, 3) {
                points += 1;
                if !partition_holds(phi, &negations, &p) {
                    bad += 1;
                }
            }
            if bad > 0 {
                violations += bad;
                violating_pairs += 1;
                if names.iter().any(|n| a.env.booleans.contains(n)) {
                    violating_pairs_boolean += 1;
                }
            }
            let (flags, ints): (Vec<String>, Vec<String>) = names.iter().cloned().partition(|n| a.env.booleans.contains(n));
            for f in box_points(&flags, 0, 1) {
                for mut p in box_points(&ints, -3, 3) {
                    p.extend(f.clone());
                    if !partition_holds(phi, &negations, &p) {
                        typed_violations += 1;
                    }
                }
            }
        }
    }
    r.line(
        "4",
        "guard partition over [-3, 3]^k (exhaustive)",
        violations == 0,
        format!(
            "{pairs} if-exp pairs, {points} points, {violations} violations in {violating_pairs} pairs, \
             {violating_pairs_boolean} of which test a boolean flag (negated as flag = 0, so flag outside {{0, 1}} satisfies neither)"
        ),
    );
    r.extra(
        "4a",
        "guard partition with boolean flags over {0, 1} and integers over [-3, 3]",
        typed_violations == 0 && pairs > 0,
        format!("{typed_violations} violations"),
    );
}

fn homogeneity(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lambdas = [Rational::new(1.into(), 2.into()), int(2), int(10)];
    let mut checks = 0;
    let mut scale_failures = 0;
    let mut order_failures = 0;
    for fleet_index in 0..100u64 {
        let mut g = Gen::new(10_000 + fleet_index);
        let f = g.function(DEPTH);
        let entry = FunctionEntry::deploy("f", &f.to_string(), None, int(64), &InferOptions::default()).unwrap();
        let workers: Vec<WorkerState> = (0..rng.gen_range(2..=5))
            .map(|k| {
                let mut w = WorkerState::new(&format!("W{k}"), int(1024), 4);
                for s in common::SERVICES {
                    w = w.with_latency(s, Rational::new(rng.gen_range(0..=200).into(), 4.into()));
                }
                w
            })
            .collect();
        let labels: Vec<String> = workers.iter().map(|w| w.label.clone()).collect();
        let mut req = InvocationRequest::new("r", "f");
        for p in &f.params {
            let v = if p == common::FLAG { rng.gen_range(0..=1) } else { rng.gen_range(0..=20) };
            req = req.bind(p, int(v));
        }
        let unbound = InvocationRequest::new("r", "f");
        for req in [&req, &unbound] {
            let base: IndexMap<String, CostValue> =
                workers.iter().map(|w| (w.label.clone(), worker_cost(&entry, req, w))).collect();
            let base_order =
                strategy_order(Strategy::MinLatency, ("t", 0), &labels, &base, &mut Default::default()).unwrap();
            for l in &lambdas {
                checks += 1;
                let scaled: IndexMap<String, CostValue> = workers
                    .iter()
                    .map(|w| {
                        let mut w = w.clone();
                        for v in w.latency_ms.values_mut() {
                            *v = &*v * l;
                        }
                        (w.label.clone(), worker_cost(&entry, req, &w))
                    })
                    .collect();
                let exact = base.iter().all(|(k, c)| match (c, &scaled[k]) {
                    (CostValue::Value(a), CostValue::Value(b)) => &(a * l) == b,
                    _ => false,
                });
                if !exact {
                    scale_failures += 1;
                }
                let order =
                    strategy_order(Strategy::MinLatency, ("t", 0), &labels, &scaled, &mut Default::default()).unwrap();
                if order != base_order {
                    order_failures += 1;
                }
            }
        }
    }
    r.line(
        "5",
        "homogeneity and min_latency argmin invariance (exact)",
        scale_failures == 0 && order_failures == 0,
        format!("100 fleets x 2 requests x 3 factors = {checks} checks, {scale_failures} cost mismatches, {order_failures} order changes"),
    );
}

fn deploy(name: &str, file: &str) -> Registry {
    let mut reg = Registry::new();
    reg.insert(FunctionEntry::deploy(name, &read(file), None, int(128), &InferOptions::default()).unwrap());
    reg
}

fn scheduler_goldens(r: &mut Report) {
    let two_zone = {
        let fleet = Fleet::new(vec![
            WorkerState::new("W1", int(1024), 4).with_latency("Database", int(4)),
            WorkerState::new("W2", int(1024), 4).with_latency("Database", int(9)),
        ])
        .unwrap();
        let mut s = Scheduler::new(parse_capp(&read("two_zone.capp.yml")).unwrap(), deploy("db_query", "db_query.msl"), fleet, 0);
        s.decide(&InvocationRequest::new("r", "db_query")).unwrap().outcome
    };
    let premium = |w1: i64, w2: i64| {
        let fleet = Fleet::new(vec![
            WorkerState::new("W1", int(1024), 4).with_latency("PremiumService", int(w1)).with_latency("BasicService", int(3)),
            WorkerState::new("W2", int(1024), 4).with_latency("PremiumService", int(w2)).with_latency("BasicService", int(3)),
        ])
        .unwrap();
        let mut s = Scheduler::new(parse_capp(&read("premium.capp.yml")).unwrap(), deploy("f1", "f1.msl"), fleet, 0);
        s.decide(&InvocationRequest::new("r", "f1").bind("isPremiumUser", int(1))).unwrap()
    };
    let map_reduce = |map: i64| {
        let fleet = Fleet::new(vec![
            WorkerState::new("W1", int(1024), 4).with_latency("Map", int(map)).with_latency("Reduce", int(1)),
            WorkerState::new("W2", int(1024), 4).with_latency("Map", int(map)).with_latency("Reduce", int(1)),
        ])
        .unwrap();
        let script = format!("{}  followup: fail\n", read("map_reduce.capp.yml"));
        let mut s = Scheduler::new(parse_capp(&script).unwrap(), deploy("mapReduce", "map_reduce.msl"), fleet, 0);
        s.decide(&InvocationRequest::new("r", "mapReduce").bind("m", int(10)).bind("r", int(10))).unwrap()
    };
    // m * (M + r * R) by hand
    let expected_cost = |m: i64, r: i64, map: i64, reduce: i64| int(m * (map + r * reduce));
    let p_low_w2 = premium(12, 8);
    let p_low_w1 = premium(8, 12);
    let over = map_reduce(40);
    let under = map_reduce(10);
    let ok = [
        two_zone == Outcome::Chosen("W1".into()),
        p_low_w2.outcome == Outcome::Chosen("W2".into()) && p_low_w1.outcome == Outcome::Chosen("W1".into()),
        over.outcome == Outcome::Failed("policy exhausted".into())
            && over.candidate_costs.values().all(|c| c.value() == Some(&expected_cost(10, 10, 40, 1))),
        under.chosen().is_some()
            && under.candidate_costs.values().all(|c| c.value() == Some(&expected_cost(10, 10, 10, 1))),
    ];
    r.line(
        "6",
        "scheduler scenario goldens",
        ok.iter().all(|b| *b),
        format!(
            "best_first -> {:?}; min_latency -> {:?} then swapped {:?}; max_latency 300 at cost {} -> {:?}, at cost {} -> {:?}",
            two_zone,
            p_low_w2.outcome,
            p_low_w1.outcome,
            over.candidate_costs["W1"],
            over.outcome,
            under.candidate_costs["W1"],
            under.outcome
        ),
    );
}

fn random_trace(seed: u64, n: usize) -> Vec<InvocationRequest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0i64;
    (0..n)
        .map(|k| {
            t += rng.gen_range(0..4);
            let id = format!("r{k}");
            let req = match rng.gen_range(0..4) {
                0 => InvocationRequest::new(&id, "f1").bind("isPremiumUser", int(rng.gen_range(0..=1))),
                1 => InvocationRequest::new(&id, "f2"),
                2 => InvocationRequest::new(&id, "mapReduce")
                    .bind("m", int(rng.gen_range(0..=6)))
                    .bind("r", int(rng.gen_range(0..=6))),
                _ => InvocationRequest::new(&id, "db_query"),
            };
            req.at(int(t))
        })
        .collect()
}

fn run_simulation(trace: &[InvocationRequest], seed: u64) -> String {
    let script = parse_capp(&read("deployment.capp.yml")).unwrap();
    let registry = Registry::load(&data("registry.json"), &InferOptions::default()).unwrap();
    let fleet = Fleet::from_json(&read("fleet.json")).unwrap();
    let mut s = Scheduler::new(script, registry, fleet, seed);
    write_log(&simulate(trace, &mut s).unwrap())
}

fn determinism(r: &mut Report) {
    let trace = random_trace(11, 500);
    let a = run_simulation(&trace, 1);
    let b = run_simulation(&trace, 1);
    let c = run_simulation(&trace, 2);
    let first_difference = a.lines().zip(c.lines()).position(|(x, y)| x != y);
    let divergence_is_random = first_difference.is_some_and(|k| {
        let line = a.lines().nth(k).unwrap();
        line.contains(r#""policy":"mapReduce""#)
    });
    let fixed: Vec<InvocationRequest> = trace.iter().filter(|q| q.function != "mapReduce").cloned().collect();
    let seed_free = run_simulation(&fixed, 1) == run_simulation(&fixed, 2);
    r.line(
        "7",
        "simulate determinism (byte-identical logs)",
        a == b && a != c && divergence_is_random && seed_free,
        format!(
            "{} log lines; same seed identical: {}; other seed first differs at line {:?} (a random-strategy decision: {}); \
             without random-strategy requests seeds agree: {}",
            a.lines().count(),
            a == b,
            first_difference.map(|k| k + 1),
            divergence_is_random,
            seed_free
        ),
    );
}

fn export_golden(r: &mut Report) {
    let p: CostProgram = read("recursion.cp").parse().unwrap();
    let got = export_interchange(&p).unwrap();
    let want = "eq(f(N,M), nat(M), [f(N-1,M)], [N >= 1]).\neq(f(N,M), 0, [], [N = 0]).\n";
    r.line("8", "interchange export golden (byte-identical)", got == want, format!("{:?}", got));
}

fn main() {
    let start = Instant::now();
    let mut r = Report { unexpected: Vec::new() };
    inference_goldens(&mut r);
    solver_goldens(&mut r);
    oracle_equivalence(&mut r);
    guard_partition(&mut r);
    homogeneity(&mut r);
    scheduler_goldens(&mut r);
    determinism(&mut r);
    export_golden(&mut r);
    println!("acceptance finished in {:.2?}", start.elapsed());
    if !r.unexpected.is_empty() {
        println!("unexpected outcomes: {}", r.unexpected.join(", "));
        std::process::exit(1);
    }
}
