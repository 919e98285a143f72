//! Plain-text environment snapshots.
//!
//! ```text
//! clusterwalk-env 1
//! d 2
//! n 4
//! p 0.3
//! seed 1
//! margin 1
//! lo -2
//! side 6
//! 010000
//! ...
//! ```
//!
//! The grid covers the box plus its margin; each line is one run along the
//! last coordinate, lines ordered row-major over the remaining coordinates.

use std::io::{BufRead, Write};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::lattice::BoxSpec;

const MAGIC: &str = "clusterwalk-env";
const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(env: &Environment, mut out: W) -> std::io::Result<()> {
    let b = env.box_spec();
    let r = env.region();
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "d {}", b.d)?;
    writeln!(out, "n {}", b.n)?;
    writeln!(out, "p {}", env.p())?;
    writeln!(out, "seed {}", env.seed())?;
    writeln!(out, "margin {}", env.margin())?;
    writeln!(out, "lo {}", r.lo)?;
    writeln!(out, "side {}", r.side)?;
    let mut line = String::with_capacity(r.side + 1);
    for row in env.statuses().chunks(r.side) {
        line.clear();
        line.extend(row.iter().map(|&o| if o { '1' } else { '0' }));
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Parameter(format!("snapshot: {}", msg.into()))
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<Environment> {
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))?
            .map_err(|e| bad(e.to_string()))
    };
    let head = next()?;
    if head != format!("{MAGIC} {VERSION}") {
        return Err(bad(format!("unrecognized header {head:?}")));
    }
    let mut field = |key: &str| -> Result<String> {
        let line = next()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(bad(format!("expected `{key}`, got {line:?}"))),
        }
    };
    fn num<T: std::str::FromStr>(key: &str, v: String) -> Result<T> {
        v.parse()
            .map_err(|_| bad(format!("bad value for {key}: {v:?}")))
    }
    let d: usize = num("d", field("d")?)?;
    let n: usize = num("n", field("n")?)?;
    let p: f64 = num("p", field("p")?)?;
    let seed: u64 = num("seed", field("seed")?)?;
    let margin: usize = num("margin", field("margin")?)?;
    let lo: i32 = num("lo", field("lo")?)?;
    let side: usize = num("side", field("side")?)?;
    let box_spec = BoxSpec::new(n, d)?;
    let region = box_spec.region().grown(margin);
    if region.lo != lo || region.side != side {
        return Err(bad("lo/side disagree with n and margin"));
    }
    let rows = region.volume() / side;
    let mut statuses = Vec::with_capacity(region.volume());
    for _ in 0..rows {
        let line = next()?;
        if line.len() != side {
            return Err(bad(format!(
                "row of length {} instead of {side}",
                line.len()
            )));
        }
        for c in line.chars() {
            statuses.push(match c {
                '0' => false,
                '1' => true,
                _ => return Err(bad(format!("invalid status character {c:?}"))),
            });
        }
    }
    Environment::from_statuses(box_spec, margin, statuses, p, seed)
}
