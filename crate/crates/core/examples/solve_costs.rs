//! Closed forms under partial bindings, then concrete values.

use capp::program::CostProgram;
use capp::rational::{format_rational, int, Rational};
use capp::solver::{evaluate_concrete, instantiate, solve_symbolic, Binding};

fn binding(pairs: &[(&str, Rational)]) -> Binding {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn show(b: &Binding) -> String {
    let pairs: Vec<String> = b.iter().map(|(k, v)| format!("{k} = {}", format_rational(v))).collect();
    format!("{{{}}}", pairs.join(", "))
}

fn main() {
    let premium: CostProgram = include_str!("data/premium.cp").parse().unwrap();
    for b in [binding(&[]), binding(&[("u", int(1))]), binding(&[("u", int(0))])] {
        println!("premium with {}: {}", show(&b), solve_symbolic(&premium, &b).unwrap());
    }

    let map_reduce: CostProgram = include_str!("data/map_reduce.cp").parse().unwrap();
    let closed = solve_symbolic(&map_reduce, &Binding::new()).unwrap();
    println!("map/reduce: {closed}");
    let half = solve_symbolic(&map_reduce, &binding(&[("m", int(4))])).unwrap();
    println!("map/reduce with m = 4: {half}");

    let full = binding(&[("m", int(4)), ("r", int(8)), ("M", Rational::new(5.into(), 2.into())), ("R", int(1))]);
    let value = instantiate(&closed, &full).into_expr();
    let eval = evaluate_concrete(&map_reduce, &full, 1_000_000).unwrap();
    println!("closed form at {}: {value}", show(&full));
    println!("unfolded: {} in {} steps", format_rational(&eval.value), eval.steps);

    let recursion: CostProgram = include_str!("data/recursion.cp").parse().unwrap();
    println!("recursion: {}", solve_symbolic(&recursion, &Binding::new()).unwrap());
    let err = evaluate_concrete(&recursion, &binding(&[("N", int(1_000)), ("M", int(1))]), 100).unwrap_err();
    println!("with little fuel: {err}");
}
