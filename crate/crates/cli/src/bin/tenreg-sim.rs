//! `tenreg-sim`: a stand-in simulator for adaptive runs.
//!
//! Reads one point per line (space-separated coordinates) from standard input
//! and prints one output per line.

use std::io::{self, BufRead, BufWriter, Write};

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, ValueEnum)]
enum Function {
    /// The 100-dimensional synthetic benchmark.
    #[value(name = "synthetic_100")]
    Synthetic100,
    /// `Σ x_k`.
    Sum,
    /// `∏ x_k`.
    Product,
}

#[derive(Parser)]
#[command(name = "tenreg-sim", version, about)]
struct Args {
    #[arg(long, value_enum, default_value = "synthetic_100")]
    function: Function,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let stdin = io::stdin();
    let mut out = BufWriter::new(io::stdout().lock());
    for (i, line) in stdin.lock().lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let x = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("line {}: cannot parse {line:?}", i + 1))?;
        let y = match args.function {
            Function::Synthetic100 => {
                tenreg::benchmarks::synthetic_100(&x).with_context(|| format!("line {}", i + 1))?
            }
            Function::Sum => x.iter().sum(),
            Function::Product => x.iter().product(),
        };
        if !y.is_finite() {
            bail!("line {}: output is not finite", i + 1);
        }
        writeln!(out, "{y}")?;
    }
    out.flush()?;
    Ok(())
}
