//! Parse a miniSL function, print it back and as JSON.

use capp::minisl::{check_wellformed, parse_function};

fn main() {
    let source = include_str!("data/map_reduce.msl");
    let f = parse_function(source, "mapReduce").expect("valid miniSL");
    println!("tag: {:?}", f.tag);
    println!("params: {:?}", f.params);
    println!("services: {:?}", f.services());
    println!("canonical source:\n{f}");
    println!("well-formedness diagnostics: {}", check_wellformed(&f).len());
    println!("{}", serde_json::to_string_pretty(&f.body).unwrap());

    match parse_function("( x ) => { call S( x ) ", "broken") {
        Ok(_) => unreachable!(),
        Err(e) => println!("broken source: {}", e.to_diagnostic().to_json()),
    }
}
