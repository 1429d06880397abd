//! Text output: numbers, CSV rows and OBJ meshes.

use std::fmt::Write;

use linecong::surfaces::Mesh;

/// `%.17g`: 17 significant digits, trailing zeros dropped, `.` as the
/// decimal separator.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_row(fields: &[String]) -> String {
    let mut row = fields.join(",");
    row.push('\n');
    row
}

/// One object per mesh, global 1-based face indices. `params` adds a
/// `vp u v [t]` line per vertex.
pub fn obj(meshes: &[(&str, &Mesh)], params: bool) -> String {
    let mut out = String::new();
    let mut offset = 0;
    for (name, mesh) in meshes {
        writeln!(out, "o {name}").unwrap();
        for x in &mesh.vertices {
            writeln!(out, "v {} {} {}", num(x[0]), num(x[1]), num(x[2])).unwrap();
        }
        if params {
            for (k, p) in mesh.params.iter().enumerate() {
                match mesh.values.get(k) {
                    Some(t) => writeln!(out, "vp {} {} {}", num(p[0]), num(p[1]), num(*t)).unwrap(),
                    None => writeln!(out, "vp {} {}", num(p[0]), num(p[1])).unwrap(),
                }
            }
        }
        for f in &mesh.faces {
            let [a, b, c, d] = f.map(|i| i + offset + 1);
            writeln!(out, "f {a} {b} {c} {d}").unwrap();
        }
        offset += mesh.vertices.len();
    }
    out
}
