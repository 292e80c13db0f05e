//! Report, sample table and profile cache output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use evanskit::evans::EvansSample;

use crate::scan::{cache_dir, cache_file_name, ScanReport};
use crate::registry::build_system;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub json: PathBuf,
    pub csv: PathBuf,
    /// Profile cache file; `None` skips writing it.
    pub profile: Option<PathBuf>,
}

impl OutputPaths {
    /// `report.json` and `samples.csv` in `dir`; the profile goes to the cache directory.
    pub fn for_report(dir: &Path, report: &ScanReport) -> OutputPaths {
        let profile = match (&report.profile_data, build_system(&report.config.system, &report.config.params)) {
            (Some(p), Ok(sys)) => {
                let cache = cache_dir(&report.config).unwrap_or_else(|| dir.join("cache"));
                Some(cache.join(cache_file_name(&report.config, &sys, p.half_length)))
            }
            _ => None,
        };
        OutputPaths { json: dir.join("report.json"), csv: dir.join("samples.csv"), profile }
    }
}

pub const CSV_HEADER: &str = "re_lambda,im_lambda,re_D,im_D,abs_D,arg_D,logscale";

/// One row per sample; `D = (re_D + i im_D)·e^{logscale}` and `arg_D` is the continuous phase.
pub fn samples_csv(samples: &[EvansSample]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    let mut phase = samples.first().map(|x| x.d.arg()).unwrap_or(0.0);
    for (i, x) in samples.iter().enumerate() {
        if i > 0 {
            phase += (x.d / samples[i - 1].d).arg();
        }
        let _ = writeln!(s, "{:e},{:e},{:e},{:e},{:e},{:e},{:e}", x.lambda.re, x.lambda.im, x.d.re, x.d.im, x.d.norm(), phase, x.logscale);
    }
    s
}

pub fn report_json(report: &ScanReport) -> Result<String, CliError> {
    serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn emit_report(report: &ScanReport, paths: &OutputPaths) -> Result<(), CliError> {
    write(&paths.json, &report_json(report)?)?;
    write(&paths.csv, &samples_csv(&report.samples))?;
    if let (Some(path), Some(p)) = (&paths.profile, &report.profile_data) {
        if !report.timings.profile_from_cache {
            write(path, &p.to_cache_string())?;
        }
    }
    Ok(())
}
