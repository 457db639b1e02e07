//! Print cost programs as clauses for PUBS or CoFloCo style analysers.

use capp::inference::{analyze, InferOptions};
use capp::program::CostProgram;
use capp::solver::export_interchange;

fn main() {
    let recursion: CostProgram = include_str!("data/recursion.cp").parse().unwrap();
    print!("{}", export_interchange(&recursion).unwrap());

    let a = analyze(include_str!("data/map_reduce.msl"), "mapReduce", &InferOptions::default()).unwrap();
    print!("{}", export_interchange(&a.program).unwrap());
}
