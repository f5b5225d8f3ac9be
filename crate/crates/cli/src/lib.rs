//! Command-line driver: resolves a study configuration, runs it level by
//! level, and writes a CSV plus an aligned table.

pub mod config;
pub mod report;

use std::io::Write;

use gwg::assembly::{Coefficient, SchemeParameters};
use gwg::verify::Study;

pub use config::{parse_config, ConfigError, StudyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn study(config: &StudyConfig) -> Result<Study, ConfigError> {
    Ok(Study {
        case: config.manufactured_case()?,
        family: config.family(),
        labels: config.levels.clone(),
        signature: config.element,
        params: SchemeParameters {
            rho: config.rho,
            gamma: config.gamma,
            coefficient: Coefficient::Identity,
        },
        solver: config.solver(),
        homogeneous: config.homogeneous,
    })
}

/// Runs the study and returns the process exit code. Progress goes to
/// `err`, the table to `out`.
pub fn run(config: &StudyConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let study = match study(config) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let (report, failure) = study.run_partial(|l| {
        let _ = writeln!(
            err,
            "1/h = {:>4}: {} dofs, energy error {}",
            l.label,
            l.dofs,
            report::sci3(l.energy)
        );
    });

    if let Some(path) = &config.output {
        let manifest = if config.manifest { config.manifest_lines() } else { Vec::new() };
        if let Err(e) = std::fs::write(path, report::format_csv(&report, &manifest)) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return EXIT_IO;
        }
    }
    if !report.levels.is_empty()
        && writeln!(out, "{}", study.signature)
            .and_then(|_| out.write_all(report::format_table(&report).as_bytes()))
            .is_err()
    {
        return EXIT_IO;
    }

    match failure {
        None => EXIT_OK,
        Some(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_singular() {
                EXIT_SINGULAR
            } else {
                EXIT_USAGE
            }
        }
    }
}
