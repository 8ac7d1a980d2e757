//! Runs a registered experiment from `key = value` text and prints the
//! result table as CSV, the same path the `plmmse` binary takes.

use plmmse::harness::{run, ExperimentConfig};

const CONFIG: &str = "
experiment = sparse
m = 16
snr-grid = 0:5:15
mc = 100
seed = 42
";

fn main() -> plmmse::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG, None)?;
    let table = run(&cfg)?;
    print!("{}", table.to_csv());
    let plmmse = table.column("plmmse").expect("sparse tables have a plmmse column");
    let z_only = table.column("z_only").expect("and a z_only column");
    let wins = plmmse.iter().zip(&z_only).filter(|(a, b)| a < b).count();
    eprintln!("plmmse beats the denoiser at {wins}/{} SNR points", plmmse.len());
    Ok(())
}
