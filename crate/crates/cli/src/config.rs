//! Run configuration files (TOML). Every key is optional; missing keys take
//! the planner defaults. Times are in days, lengths in km, speeds in m/s.

use std::path::Path;

use adr_core::bnb::{BranchRule, Strategy};
use adr_core::orbital::units::{DAY, KM};
use adr_core::planner::PlannerConfig;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    /// Depth-first, diving on the most recent node.
    Depth,
    /// Best bound first.
    Breadth,
}

impl From<StrategyName> for Strategy {
    fn from(s: StrategyName) -> Self {
        match s {
            StrategyName::Depth => Strategy::DepthFirst,
            StrategyName::Breadth => Strategy::BestBoundBreadth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BranchRuleName {
    /// First fractional binary in variable order.
    Numerical,
    /// Fractional binary appearing in the most constraints.
    MostConstrained,
    /// Fractional binary with the largest cost coefficient.
    MaxCost,
}

impl From<BranchRuleName> for BranchRule {
    fn from(r: BranchRuleName) -> Self {
        match r {
            BranchRuleName::Numerical => BranchRule::NumericalOrder,
            BranchRuleName::MostConstrained => BranchRule::MostConstrained,
            BranchRuleName::MaxCost => BranchRule::MaxCostPenalty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub n_select: usize,
    pub t_max_days: f64,
    pub t_deorb_days: f64,
    pub min_altitude_km: f64,
    pub max_altitude_km: f64,
    /// Most expensive transfer kept (m/s).
    pub dv_max: f64,
    /// Operation cost per removed debris (m/s).
    pub deorbit_cost: f64,
    pub t_cap_init_days: f64,
    pub max_iterations: usize,
    pub shrink_factor: f64,
    pub alpha_half_width_km: f64,
    pub strategy: StrategyName,
    pub branch_rule: BranchRuleName,
    pub node_limit: usize,
    /// Debris to start from; otherwise the first debris is free.
    pub start_debris: Option<usize>,
}

impl Default for RunConfigFile {
    fn default() -> Self {
        let p = PlannerConfig::default();
        Self {
            n_select: p.n_select,
            t_max_days: p.t_max / DAY,
            t_deorb_days: p.t_deorb / DAY,
            min_altitude_km: p.transfer.min_altitude / KM,
            max_altitude_km: p.transfer.max_altitude / KM,
            dv_max: p.dv_max,
            deorbit_cost: p.per_debris_cost,
            t_cap_init_days: p.iteration.t_cap_init / DAY,
            max_iterations: p.iteration.max_iterations,
            shrink_factor: p.iteration.shrink_factor,
            alpha_half_width_km: p.iteration.alpha_half_width / KM,
            strategy: StrategyName::Breadth,
            branch_rule: BranchRuleName::MostConstrained,
            node_limit: p.search.node_limit,
            start_debris: None,
        }
    }
}

impl RunConfigFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() as u64 + 1);
            // the key assigned on the offending line
            let field = text
                .lines()
                .nth(line.saturating_sub(1) as usize)
                .and_then(|l| l.split_once('='))
                .map_or_else(|| "document".to_string(), |(k, _)| k.trim().to_string());
            CliError::Parse { path: path.to_path_buf(), line, field, message: e.message().to_string() }
        })?;
        cfg.check(text, path)?;
        Ok(cfg)
    }

    fn check(&self, text: &str, path: &Path) -> Result<(), CliError> {
        let fail = |field: &str, message: String| CliError::Parse {
            path: path.to_path_buf(),
            line: key_line(text, field),
            field: field.into(),
            message,
        };
        let positive = [
            ("t_max_days", self.t_max_days),
            ("dv_max", self.dv_max),
            ("t_cap_init_days", self.t_cap_init_days),
            ("alpha_half_width_km", self.alpha_half_width_km),
            ("max_altitude_km", self.max_altitude_km),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(fail(field, format!("must be positive, got {v}")));
            }
        }
        for (field, v) in [("t_deorb_days", self.t_deorb_days), ("deorbit_cost", self.deorbit_cost), ("min_altitude_km", self.min_altitude_km)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(fail(field, format!("must be non-negative, got {v}")));
            }
        }
        if self.n_select < 2 {
            return Err(fail("n_select", format!("must be at least 2, got {}", self.n_select)));
        }
        if self.min_altitude_km >= self.max_altitude_km {
            return Err(fail("min_altitude_km", "must be below max_altitude_km".into()));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(fail("shrink_factor", format!("must lie in (0, 1), got {}", self.shrink_factor)));
        }
        if self.t_max_days <= self.n_select as f64 * self.t_deorb_days {
            return Err(fail("t_max_days", "must exceed n_select * t_deorb_days".into()));
        }
        for (field, v) in [("max_iterations", self.max_iterations), ("node_limit", self.node_limit)] {
            if v == 0 {
                return Err(fail(field, "must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn planner_config(&self) -> PlannerConfig {
        let mut p = PlannerConfig {
            n_select: self.n_select,
            t_max: self.t_max_days * DAY,
            t_deorb: self.t_deorb_days * DAY,
            dv_max: self.dv_max,
            per_debris_cost: self.deorbit_cost,
            start_debris: self.start_debris,
            ..Default::default()
        };
        p.transfer = p.transfer.with_altitude_bounds(self.min_altitude_km * KM, self.max_altitude_km * KM);
        p.iteration.t_cap_init = self.t_cap_init_days * DAY;
        p.iteration.max_iterations = self.max_iterations;
        p.iteration.shrink_factor = self.shrink_factor;
        p.iteration.alpha_half_width = self.alpha_half_width_km * KM;
        p.search.strategy = self.strategy.into();
        p.search.branch_rule = self.branch_rule.into();
        p.search.node_limit = self.node_limit;
        p
    }
}

/// Line where `key` is assigned, or 0 when the key is absent.
fn key_line(text: &str, key: &str) -> u64 {
    text.lines()
        .position(|l| l.split('=').next().is_some_and(|k| k.trim() == key))
        .map_or(0, |k| k as u64 + 1)
}
