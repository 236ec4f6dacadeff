// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use emsteady::bench::{bench_csv, bench_sizes, scaling_checks, DEFAULT_SIZES};
use serde_json::json;

use crate::output::{write_atomic, Outcome};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Approximate segment counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
    pub sizes: Vec<usize>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Also write the CSV table here.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

pub fn bench(args: &BenchArgs) -> Result<Outcome> {
    if args.sizes.iter().any(|&s| s < 4) {
        bail!("sizes must be at least 4 segments");
    }
    let mut sizes = args.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let rows = bench_sizes(&sizes, args.seed)?;
    let checks = scaling_checks(&rows);
    let table = bench_csv(&rows);
    if let Some(p) = &args.csv {
        write_atomic(p, &table)?;
    }

    let mut summary = table.trim_end().to_string();
    let mut warnings = Vec::new();
    for c in &checks {
        summary.push_str(&format!(
            "\n{} {}->{}: ratio {:.2} (bound {:.2}) {}",
            c.engine,
            c.from,
            c.to,
            c.ratio,
            c.bound,
            if c.ok { "ok" } else { "FAIL" }
        ));
        if !c.ok {
            warnings.push(format!("{} engine grows {:.2}x from {} to {} segments", c.engine, c.ratio, c.from, c.to));
        }
    }
    for r in &rows {
        let faster = r.t_voltage < r.t_current;
        summary.push_str(&format!(
            "\n{}: voltage {:.3} ms vs current {:.3} ms {}",
            r.size,
            r.t_voltage,
            r.t_current,
            if faster { "ok" } else { "FAIL" }
        ));
        if !faster {
            warnings.push(format!("voltage engine not faster at {} segments", r.size));
        }
    }
    if checks.is_empty() {
        summary.push_str("\nsingle size: scaling check skipped");
    }
    let details = json!({ "rows": rows, "scaling": checks });
    Ok(Outcome { code: if warnings.is_empty() { 0 } else { 2 }, summary, warnings, details })
}
