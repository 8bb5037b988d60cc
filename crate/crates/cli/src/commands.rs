use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use adr_core::orbital::units::rate_deg_per_day;
use adr_core::orbital::Constants;
use adr_core::planner::{plan, validate_side_choices, MissionPlan};

use crate::catalog::CatalogFile;
use crate::config::{BranchRuleName, RunConfigFile, StrategyName};
use crate::error::{CliError, ExitStatus};
use crate::report::{cumulative_dv_csv, drift_orbits_csv, history_csv, raan_correction_csv, report_text, ReportInput};

pub const REPORT_FILE: &str = "report.txt";
pub const HISTORY_FILE: &str = "history.csv";
pub const DRIFT_ORBITS_FILE: &str = "drift_orbits.csv";
pub const RAAN_CORRECTION_FILE: &str = "raan_correction.csv";
pub const CUMULATIVE_DV_FILE: &str = "cumulative_dv.csv";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub catalog: PathBuf,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    /// Overrides the configured search strategy.
    pub strategy: Option<StrategyName>,
    /// Overrides the configured branching rule.
    pub branch_rule: Option<BranchRuleName>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub plan: MissionPlan,
    pub status: ExitStatus,
}

/// Plans a mission and writes the report and plot data into `out_dir`.
/// Nothing is written unless planning succeeds.
pub fn run(opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let consts = Constants::default();
    let catalog_file = CatalogFile::read(&opts.catalog)?;
    let mut config = RunConfigFile::read(&opts.config)?;
    if let Some(s) = opts.strategy {
        config.strategy = s;
    }
    if let Some(r) = opts.branch_rule {
        config.branch_rule = r;
    }
    let catalog = catalog_file.debris(&opts.catalog, &consts)?;
    let planner_config = config.planner_config();
    log::info!("{} debris read from {}", catalog.len(), opts.catalog.display());
    let plan = plan(&catalog, &planner_config)?;
    let flags = validate_side_choices(&plan, &catalog, &planner_config.transfer);
    for f in &flags {
        log::warn!("leg {}->{} sits at {:?}", f.from_id, f.to_id, f.bound);
    }

    let input = ReportInput { epoch: &catalog_file.epoch, catalog: &catalog, config: &config, plan: &plan, flags: &flags, consts: &consts };
    let files = [
        (REPORT_FILE, report_text(&input)),
        (HISTORY_FILE, history_csv(&plan)),
        (DRIFT_ORBITS_FILE, drift_orbits_csv(&plan, &catalog, &consts)),
        (RAAN_CORRECTION_FILE, raan_correction_csv(&plan, &catalog, &consts)),
        (CUMULATIVE_DV_FILE, cumulative_dv_csv(&plan)),
    ];
    std::fs::create_dir_all(&opts.out_dir).map_err(|source| CliError::Write { path: opts.out_dir.clone(), source })?;
    for (name, text) in files {
        let path = opts.out_dir.join(name);
        std::fs::write(&path, text).map_err(|source| CliError::Write { path, source })?;
    }
    let status = if plan.converged { ExitStatus::Converged } else { ExitStatus::NotConverged };
    Ok(RunOutcome { plan, status })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub text: String,
    pub valid: bool,
}

/// Validates every row of a catalog and lists the nodal precession rates.
pub fn check(path: &Path) -> Result<CheckReport, CliError> {
    let consts = Constants::default();
    let catalog = CatalogFile::read(path)?;
    let mut text = String::new();
    let _ = writeln!(text, "catalog: {} ({} rows, epoch {})", path.display(), catalog.rows.len(), catalog.epoch);
    let _ = writeln!(text, "{:>6} {:>6} {:>10} {:>8} {:>8} {:>10}  {}", "line", "id", "a_km", "e", "i_deg", "raan_deg", "raan rate (deg/day)");
    let mut valid = true;
    for row in &catalog.rows {
        let verdict = match row.elements(&consts) {
            Ok(el) => format!("{:.3}", rate_deg_per_day(el.precession_rate(&consts))),
            Err(message) => {
                valid = false;
                format!("INVALID: {message}")
            }
        };
        let _ = writeln!(
            text,
            "{:>6} {:>6} {:>10.1} {:>8.4} {:>8.2} {:>10.2}  {verdict}",
            row.line, row.id, row.a_km, row.e, row.i_deg, row.raan_deg
        );
    }
    let bad = catalog.rows.iter().filter(|r| r.elements(&consts).is_err()).count();
    let _ = writeln!(text, "{} valid, {bad} invalid", catalog.rows.len() - bad);
    Ok(CheckReport { text, valid })
}
