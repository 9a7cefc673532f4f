//! Buffer dumps: a `name,rows,cols` header line, then for every slot a
//! `name,rows,cols` record followed by `rows` lines of `cols` values.
//! Vectors dump as one row; feature maps as `channels x (height * width)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::system::isa::Location;
use crate::system::{MachineState, Value};

fn rows_of(v: &Value) -> Vec<Vec<f64>> {
    match v {
        Value::Vector(x) => vec![x.iter().copied().collect()],
        Value::Matrix(m) => m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        Value::Map(f) => f
            .data
            .chunks(f.height * f.width)
            .map(<[f64]>::to_vec)
            .collect(),
    }
}

fn dump_slots(out: &mut String, slots: &BTreeMap<usize, Value>, make: fn(usize) -> Location) {
    for (&addr, v) in slots {
        let rows = rows_of(v);
        let cols = rows.first().map_or(0, Vec::len);
        let _ = writeln!(out, "{},{},{cols}", make(addr), rows.len());
        for r in rows {
            let line: Vec<String> = r.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
    }
}

/// Output buffer dump.
pub fn dump_output(state: &MachineState) -> String {
    let mut s = String::from("name,rows,cols\n");
    dump_slots(&mut s, &state.output_buffer, Location::output);
    s
}

/// Global then output buffer.
pub fn dump_all(state: &MachineState) -> String {
    let mut s = String::from("name,rows,cols\n");
    dump_slots(&mut s, &state.global_buffer, Location::global);
    dump_slots(&mut s, &state.output_buffer, Location::output);
    s
}
