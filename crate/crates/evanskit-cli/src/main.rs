use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use evanskit_cli::{emit_report, list_systems, run_scan, OutputPaths, Overrides, ScanConfig};

/// Evans-function stability scan of a small-amplitude shock profile.
#[derive(Parser, Debug)]
#[command(name = "evanskit", version)]
struct Args {
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    /// half-annulus or rectangle
    #[arg(long)]
    contour: Option<String>,
    #[arg(long)]
    rmin: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long = "domain-L")]
    domain_l: Option<f64>,
    /// ODE tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory for report.json and samples.csv
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the registered systems and exit
    #[arg(long)]
    list_systems: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_systems {
        for e in list_systems() {
            let params: Vec<String> = e.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
            println!("{:<14} {}  [{}]", e.name, e.summary, params.join(", "));
        }
        return ExitCode::SUCCESS;
    }
    let text = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(3);
            }
        },
        None => None,
    };
    let ov = Overrides {
        system: args.system,
        eps: args.eps,
        contour: args.contour,
        rmin: args.rmin,
        rmax: args.rmax,
        points: args.points,
        domain_l: args.domain_l,
        tol: args.tol,
        out: args.out,
        jobs: args.jobs,
    };
    let cfg = match ScanConfig::from_sources(text.as_deref(), &ov) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let report = match run_scan(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = emit_report(&report, &OutputPaths::for_report(&dir, &report)) {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    let w = report.contours.first().and_then(|c| c.winding).map(|w| w.to_string()).unwrap_or_else(|| "-".into());
    println!("{} eps={} winding={} verdict={:?}", cfg.system, cfg.eps, w, report.verdict);
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(report.exit_code() as u8)
}
