//! Text report and plot-data tables of a mission plan.
//!
//! Every table carries its units in the column names. Numbers are printed
//! with fixed precision so that identical plans give identical bytes.

use std::fmt::Write as _;

use adr_core::orbital::units::{DAY, DEG, KM};
use adr_core::orbital::Constants;
use adr_core::planner::{Debris, MissionPlan, SideFlag};
use adr_core::transfer::TransferSolution;

use crate::config::RunConfigFile;

/// Everything a report is rendered from.
pub struct ReportInput<'a> {
    pub epoch: &'a str,
    pub catalog: &'a [Debris],
    pub config: &'a RunConfigFile,
    pub plan: &'a MissionPlan,
    pub flags: &'a [SideFlag],
    pub consts: &'a Constants,
}

fn elements<'a>(catalog: &'a [Debris], id: usize) -> &'a adr_core::orbital::OrbitalElements {
    &catalog.iter().find(|d| d.id == id).expect("plan ids come from the catalog").elements
}

fn path_label(ids: &[usize]) -> String {
    ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" ")
}

/// Table of alternating debris and drift rows for one path.
fn path_table(out: &mut String, catalog: &[Debris], path: &[usize], legs: &[TransferSolution], arrivals: &[f64], departures: &[f64]) {
    let _ = writeln!(
        out,
        "  {:<14} {:>10} {:>10} {:>12} {:>10} {:>8} {:>10} {:>10}",
        "orbit", "arrive(d)", "depart(d)", "a(km)", "i(deg)", "side", "dV(m/s)", "dT(d)"
    );
    for (k, &id) in path.iter().enumerate() {
        let el = elements(catalog, id);
        let _ = writeln!(
            out,
            "  {:<14} {:>10.2} {:>10.2} {:>12.1} {:>10.2} {:>8} {:>10.1} {:>10.1}",
            format!("debris {id}"),
            arrivals[k] / DAY,
            departures[k] / DAY,
            el.a / KM,
            el.i / DEG,
            "",
            0.0,
            (departures[k] - arrivals[k]) / DAY
        );
        if let Some(leg) = legs.get(k) {
            let _ = writeln!(
                out,
                "  {:<14} {:>10} {:>10.2} {:>12.1} {:>10.2} {:>8} {:>10.1} {:>10.1}",
                format!("drift {}->{}", leg.from_id, leg.to_id),
                "",
                leg.t_depart / DAY,
                leg.a_drift / KM,
                leg.i_drift / DEG,
                leg.side.label(),
                leg.dv_total,
                leg.duration / DAY
            );
        }
    }
}

pub fn report_text(input: &ReportInput) -> String {
    let ReportInput { epoch, catalog, config, plan, flags, .. } = input;
    let mut out = String::new();
    let _ = writeln!(out, "DEBRIS REMOVAL MISSION PLAN");
    let _ = writeln!(out);
    let _ = writeln!(out, "catalog epoch: {epoch}");
    let _ = writeln!(out, "candidates: {}", catalog.len());
    let _ = writeln!(out, "debris removed: {}", config.n_select);
    let _ = writeln!(out, "duration limit: {:.1} d", config.t_max_days);
    let _ = writeln!(out, "drift altitude window: {:.0} to {:.0} km", config.min_altitude_km, config.max_altitude_km);
    let _ = writeln!(out, "transfer cost limit: {:.1} m/s", config.dv_max);
    let _ = writeln!(out);
    let status = if plan.converged {
        format!("converged after {} iterations", plan.iterations)
    } else if plan.oscillation {
        format!("path oscillation, best of {} iterations kept", plan.iterations)
    } else {
        format!("not converged, best of {} iterations kept", plan.iterations)
    };
    let _ = writeln!(out, "status: {status}");
    let _ = writeln!(out, "path: {}", path_label(&plan.path));
    let _ = writeln!(out);
    path_table(&mut out, catalog, &plan.path, &plan.legs, &plan.arrivals, &plan.departures);
    let _ = writeln!(out);
    let _ = writeln!(out, "total dV: {:.1} m/s", plan.total_dv);
    let _ = writeln!(out, "total duration: {:.1} d", plan.total_duration / DAY);
    if config.deorbit_cost > 0.0 {
        let ops = config.deorbit_cost * plan.path.len() as f64;
        let _ = writeln!(out, "with deorbit operations: {:.1} m/s", plan.total_dv + ops);
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "initial reference path: {}", path_label(&plan.initial_path));
    let mut arrivals = vec![0.0];
    let mut departures = Vec::new();
    for leg in &plan.initial_legs {
        departures.push(leg.t_depart);
        arrivals.push(leg.t_depart + leg.duration);
    }
    departures.push(*arrivals.last().unwrap());
    path_table(&mut out, catalog, &plan.initial_path, &plan.initial_legs, &arrivals, &departures);
    let initial_dv: f64 = plan.initial_legs.iter().map(|l| l.dv_total).sum();
    let initial_duration: f64 = plan.initial_legs.iter().map(|l| l.duration).sum();
    let _ = writeln!(out, "initial total dV: {initial_dv:.1} m/s");
    let _ = writeln!(out, "initial drift time: {:.1} d", initial_duration / DAY);
    let _ = writeln!(out);

    let _ = writeln!(
        out,
        "model: {} variables, {} constraints; {} pairs eliminated; reduced to {} variables, {} constraints",
        plan.full_size.variables, plan.full_size.constraints, plan.eliminated, plan.reduced_size.variables, plan.reduced_size.constraints
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "iterations:");
    let _ = writeln!(out, "  {:>4} {:>6} {:<16} {:>12} {:>12} {:>12} {:>12}  {}", "it", "nodes", "path", "lin dV(m/s)", "lin T(d)", "dV(m/s)", "T(d)", "step");
    for row in &plan.history {
        let _ = writeln!(
            out,
            "  {:>4} {:>6} {:<16} {:>12.1} {:>12.1} {:>12.1} {:>12.1}  {}",
            row.iteration,
            row.nodes,
            path_label(&row.path),
            row.linear_dv,
            row.linear_duration / DAY,
            row.exact_dv,
            row.exact_duration / DAY,
            if row.accepted { "kept" } else { "undone" }
        );
    }
    let _ = writeln!(out);
    if flags.is_empty() {
        let _ = writeln!(out, "side check: no drift orbit at a bound");
    } else {
        let _ = writeln!(out, "side check:");
        for f in flags.iter() {
            let flipped = f.flipped_dv.map_or("no admissible drift".to_string(), |v| format!("{v:.1} m/s"));
            let _ = writeln!(
                out,
                "  leg {}->{} at {:?}: {:.1} m/s, other side {flipped}",
                f.from_id, f.to_id, f.bound, f.dv
            );
        }
    }
    out
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn history_csv(plan: &MissionPlan) -> String {
    csv_table(
        &["iteration", "nodes", "path", "linear_dv_mps", "linear_duration_d", "exact_dv_mps", "exact_duration_d", "proof", "accepted"],
        plan.history.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                r.nodes.to_string(),
                path_label(&r.path),
                format!("{:.3}", r.linear_dv),
                format!("{:.3}", r.linear_duration / DAY),
                format!("{:.3}", r.exact_dv),
                format!("{:.3}", r.exact_duration / DAY),
                format!("{:?}", r.proof).to_lowercase(),
                r.accepted.to_string(),
            ]
        }),
    )
}

/// Orbit occupied over time: each debris orbit while waiting there, then
/// each drift orbit.
pub fn drift_orbits_csv(plan: &MissionPlan, catalog: &[Debris], consts: &Constants) -> String {
    let mut rows = Vec::new();
    for (k, &id) in plan.path.iter().enumerate() {
        let el = elements(catalog, id);
        rows.push(vec![
            format!("{:.3}", plan.arrivals[k] / DAY),
            format!("{:.3}", plan.departures[k] / DAY),
            "debris".into(),
            id.to_string(),
            format!("{:.3}", el.a / KM),
            format!("{:.3}", (el.a - consts.earth_radius) / KM),
            format!("{:.4}", el.i / DEG),
        ]);
        if let Some(leg) = plan.legs.get(k) {
            rows.push(vec![
                format!("{:.3}", leg.t_depart / DAY),
                format!("{:.3}", (leg.t_depart + leg.duration) / DAY),
                "drift".into(),
                format!("{}-{}", leg.from_id, leg.to_id),
                format!("{:.3}", leg.a_drift / KM),
                format!("{:.3}", (leg.a_drift - consts.earth_radius) / KM),
                format!("{:.4}", leg.i_drift / DEG),
            ]);
        }
    }
    csv_table(&["start_d", "end_d", "phase", "orbit", "a_km", "altitude_km", "inclination_deg"], rows)
}

/// RAAN of the vehicle minus RAAN of the target debris along each drift,
/// sampled daily and at arrival.
pub fn raan_correction_csv(plan: &MissionPlan, catalog: &[Debris], consts: &Constants) -> String {
    let mut rows = Vec::new();
    for leg in &plan.legs {
        let (from, to) = (elements(catalog, leg.from_id), elements(catalog, leg.to_id));
        let rate = consts.raan_precession_rate(leg.a_drift, 0.0, leg.i_drift).expect("validated drift orbit");
        let start = from.raan_at(leg.t_depart, consts);
        let end = leg.t_depart + leg.duration;
        let steps = (leg.duration / DAY).ceil() as usize;
        for s in 0..=steps {
            let t = (leg.t_depart + s as f64 * DAY).min(end);
            let diff = (start + rate * (t - leg.t_depart) - to.raan_at(t, consts)).to_degrees();
            let wrapped = (diff + 180.0).rem_euclid(360.0) - 180.0;
            rows.push(vec![format!("{}-{}", leg.from_id, leg.to_id), format!("{:.3}", t / DAY), format!("{wrapped:.4}")]);
        }
    }
    csv_table(&["leg", "t_d", "raan_difference_deg"], rows)
}

/// Cumulative cost over time for the initial reference path and the final
/// plan. The first two burns of a transfer happen at departure and the last
/// two at arrival.
pub fn cumulative_dv_csv(plan: &MissionPlan) -> String {
    let mut rows = Vec::new();
    for (scenario, legs) in [("initial", &plan.initial_legs), ("optimized", &plan.legs)] {
        let mut total = 0.0;
        let mut push = |t: f64, v: f64| rows.push(vec![scenario.to_string(), format!("{:.3}", t / DAY), format!("{v:.3}")]);
        push(0.0, 0.0);
        for leg in legs.iter() {
            let [p1, a1, a2, p2] = leg.dv_breakdown;
            push(leg.t_depart, total);
            total += p1 + a1;
            push(leg.t_depart, total);
            push(leg.t_depart + leg.duration, total);
            total += a2 + p2;
            push(leg.t_depart + leg.duration, total);
        }
    }
    csv_table(&["scenario", "t_d", "cumulative_dv_mps"], rows)
}
