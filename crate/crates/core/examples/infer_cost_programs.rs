//! Infer cost programs for the bundled functions.

use capp::inference::{analyze, InferOptions, LoopBound};

fn main() {
    let functions = [
        ("f1", include_str!("data/f1.msl"), vec![("isPremiumUser", "u"), ("PremiumService", "P"), ("BasicService", "B")]),
        ("f2", include_str!("data/f2.msl"), vec![("IsPremiumUser", "K"), ("PremiumService", "P"), ("BasicService", "B")]),
        ("mapReduce", include_str!("data/map_reduce.msl"), vec![("Map", "M"), ("Reduce", "R")]),
    ];
    for (name, source, aliases) in functions {
        let options = InferOptions {
            aliases: aliases.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            ..InferOptions::default()
        };
        let a = analyze(source, name, &options).unwrap();
        println!("# {name}\n{}", a.program);
    }

    let inclusive = InferOptions {
        loop_bound: LoopBound::Inclusive,
        ..InferOptions::default()
    };
    let a = analyze(include_str!("data/map_reduce.msl"), "mapReduce", &inclusive).unwrap();
    println!("# mapReduce, inclusive ranges\n{}", a.program);
}
