//! Runs a TOML sweep, writes the CSV outputs and the freeze table.
//!
//! `cargo run --release --example sweep_from_config -- [config.toml] [out_dir]`

use std::path::PathBuf;

use xyz_dynamics::sweep::{freeze_report, run_sweep, CheckStatus, FreezeTolerances, SweepConfig};
use xyz_dynamics::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/closed_smoke.toml")
    });
    let mut cfg = SweepConfig::from_path(&path)?;
    if let Some(out) = args.next() {
        cfg.output_dir = out.into();
    }

    let points = cfg.points()?;
    println!("{}: {} mode, {} points", path.display(), cfg.mode.label(), points.len());
    let output = run_sweep(&cfg)?;
    println!("{} rows -> {}", output.rows.len(), output.summary_path.display());
    for row in output.rows.iter().take(6) {
        println!(
            "  Z={} delta={} a/lambda={} ({},{}): L_avg {:.5}  tau_f {:.2}  L_f {:.5}",
            row.coordination, row.delta, row.lambda_or_a, row.pair_i, row.pair_j, row.l_avg, row.tau_f, row.l_f
        );
    }

    let (table, checks) = freeze_report(output.summary_path.parent().unwrap(), &FreezeTolerances::from_config(&cfg))?;
    let failed = checks.iter().filter(|c| c.status == CheckStatus::Fail).count();
    println!("{} freeze checks, {failed} failed -> {}", checks.len(), table.display());
    Ok(())
}
