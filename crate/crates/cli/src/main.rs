use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clm_cli::config::{Experiment, ExperimentConfig};
use clm_cli::{run, write_csv, write_json, RunReport};

#[derive(Parser)]
#[command(name = "clm", version, about = "De Gregorio / CLM experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(clap::Args, Default)]
struct Overrides {
    /// `degregorio` or `clm`
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    experiment: Option<String>,
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long = "T", global = true)]
    t: Option<f64>,
    /// `mean_zero` or `vanish_at_zero`
    #[arg(long, global = true)]
    gauge: Option<String>,
    /// Initial-data descriptor such as `bump(a=2)`
    #[arg(long, global = true)]
    init: Option<String>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV and JSON artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file or from flags alone
    Run { config: Option<PathBuf> },
    /// Run every acceptance experiment with its preset settings
    Suite,
    /// Cross-check the analytic linearizations against finite differences
    Oracle,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), Box<dyn std::error::Error>> {
        let pairs = [
            ("model", self.model.clone()),
            ("N", self.n.map(|v| v.to_string())),
            ("dt", self.dt.map(|v| v.to_string())),
            ("T", self.t.map(|v| v.to_string())),
            ("gauge", self.gauge.clone()),
            ("init", self.init.clone()),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if let Some(eps) = self.eps {
            cfg.init = cfg.init.clone().with_eps(eps);
        }
        if let Some(seed) = self.seed {
            cfg.init = cfg.init.clone().with_seed(seed);
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(())
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<RunReport, Box<dyn std::error::Error>> {
    let report = run(cfg)?;
    println!("{} ({:.1} s)", cfg.experiment.name(), report.wall_time_s);
    for (k, v) in &report.metrics {
        println!("  {k} = {v:e}");
    }
    if let Some(b) = &report.blow_up {
        println!("  stopped early: {b}");
    }
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "  criterion {:>2} {verdict}: {} ({})",
            c.criterion, c.description, c.detail
        );
    }
    if let Some(dir) = &cfg.output_dir {
        let csv = write_csv(&report, dir)?;
        let json = write_json(&report, dir)?;
        println!("  wrote {} and {}", csv.display(), json.display());
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<bool, Box<dyn std::error::Error>> {
        let o = &cli.overrides;
        match &cli.command {
            Command::Run { config } => {
                let mut cfg = match config {
                    Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path)?)?,
                    None => {
                        let name = o
                            .experiment
                            .as_deref()
                            .ok_or("need a config file or --experiment")?;
                        ExperimentConfig::preset(name.parse()?)
                    }
                };
                if config.is_some() {
                    if let Some(name) = &o.experiment {
                        cfg.set("experiment", name)?;
                    }
                }
                o.apply(&mut cfg)?;
                Ok(execute(&cfg)?.passed())
            }
            Command::Suite => {
                let mut all = true;
                for e in Experiment::ALL {
                    let mut cfg = ExperimentConfig::preset(e);
                    if let Some(out) = &o.out {
                        cfg.output_dir = Some(out.clone());
                    }
                    all &= execute(&cfg)?.passed();
                }
                Ok(all)
            }
            Command::Oracle => {
                let mut cfg = ExperimentConfig::preset(Experiment::OracleCheck);
                o.apply(&mut cfg)?;
                Ok(execute(&cfg)?.passed())
            }
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
