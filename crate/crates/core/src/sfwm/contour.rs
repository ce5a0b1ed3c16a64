//! Phase-matching contour tracing: roots of Δk(λ_i) = 0 per pump
//! wavelength under energy conservation, linked into branches.
//!
//! Co-polarized contours close through the degeneracy line λ_i → λ_p at
//! the zero-dispersion pumps, so a branch whose ends both terminate on the
//! degeneracy edge (or that returns to its start) is flagged closed.
//! Ends at the scan window or the dispersion-table reach mark the branch
//! truncated instead.

use super::{delta_k_contour, NonlinearContext, ProcessId};
use crate::error::{Error, Result};
use crate::modesolver::DispersionPair;
use crate::units::{lambda_um_from_omega, omega_from_lambda_um};
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracedPoint {
    pub lambda_p_um: f64,
    pub lambda_s_um: f64,
    pub lambda_i_um: f64,
}

/// How a branch terminated on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchEnd {
    /// roots merged inside the window (contour turning point)
    Tip,
    /// reached the degeneracy exclusion edge λ_i → λ_p
    Degeneracy,
    /// clipped by the idler window or the dispersion-table reach
    Window,
    /// clipped by the pump scan range
    PumpRange,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhasematchBranch {
    pub process: ProcessId,
    pub closed: bool,
    pub truncated: bool,
    pub points: Vec<TracedPoint>,
    pub ends: (BranchEnd, BranchEnd),
}

#[derive(Debug, Clone)]
pub struct ContourOptions {
    /// pump wavelength range (µm)
    pub lambda_p_um: (f64, f64),
    /// idler scan window (µm)
    pub lambda_i_um: (f64, f64),
    /// pump samples across the range
    pub n_pump: usize,
    /// idler scan samples per pump column
    pub n_idler: usize,
    /// |Δk| accepted as a root (rad/m)
    pub tolerance_rad_m: f64,
    /// bisection width target in λ_i (nm)
    pub bisect_nm: f64,
    /// excluded band below the pump, λ_i ≤ λ_p − δ (µm)
    pub degeneracy_margin_um: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            lambda_p_um: (0.70, 0.90),
            lambda_i_um: (0.45, 0.74),
            n_pump: 400,
            n_idler: 600,
            tolerance_rad_m: 1e-2,
            bisect_nm: 1e-3,
            degeneracy_margin_um: 0.004,
        }
    }
}

/// Column scan state used while linking roots across pump samples.
struct Chain {
    points: Vec<TracedPoint>,
    start_end: BranchEnd,
    /// set when the chain terminates
    stop_end: Option<BranchEnd>,
}

/// Energy-conserving signal wavelength; exact in 1/λ.
fn conjugate_lambda(lambda_p_um: f64, lambda_i_um: f64) -> f64 {
    1.0 / (2.0 / lambda_p_um - 1.0 / lambda_i_um)
}

/// Feasible idler scan interval for one pump column: the requested window
/// intersected with the dispersion-table reach of both the idler and the
/// conjugate signal frequency, and the degeneracy exclusion.
///
/// Returns (λ_lo, λ_hi, upper-edge-is-degeneracy).
fn feasible_interval(
    opts: &ContourOptions,
    tables: &DispersionPair,
    lambda_p: f64,
) -> Option<(f64, f64, bool)> {
    let (w_lo, w_hi) = tables.common_omega_range();
    let omega_p = omega_from_lambda_um(lambda_p);
    if omega_p < w_lo || omega_p > w_hi {
        return None;
    }
    // ω_i itself in table and the conjugate ω_s = 2ω_p − ω_i in table:
    //   ω_i ∈ [max(w_lo, 2ω_p − w_hi), min(w_hi, 2ω_p − w_lo)]
    let omega_i_min = w_lo.max(2.0 * omega_p - w_hi);
    let omega_i_max = w_hi.min(2.0 * omega_p - w_lo);
    if omega_i_max <= omega_i_min {
        return None;
    }
    let lam_lo = opts.lambda_i_um.0.max(lambda_um_from_omega(omega_i_max));
    let degen_edge = lambda_p - opts.degeneracy_margin_um;
    let lam_hi_table = lambda_um_from_omega(omega_i_min);
    let lam_hi = opts.lambda_i_um.1.min(degen_edge).min(lam_hi_table);
    if !(lam_hi > lam_lo) {
        return None;
    }
    let upper_is_degeneracy = lam_hi == degen_edge;
    // nudge inward so edge samples cannot fall out of range by roundoff
    let nudge = 1e-9 * (lam_hi - lam_lo);
    Some((lam_lo + nudge, lam_hi - nudge, upper_is_degeneracy))
}

/// Finds all Δk roots along one pump column by sign-change bracketing and
/// bisection. Returns (roots, fraction of scanned points within tolerance).
fn column_roots(
    process: ProcessId,
    lambda_p: f64,
    interval: (f64, f64),
    n_scan: usize,
    opts: &ContourOptions,
    tables: &DispersionPair,
    ctx: &NonlinearContext,
) -> Result<(Vec<f64>, f64)> {
    let (lo, hi) = interval;
    let mut roots = Vec::new();
    let mut near_zero = 0usize;
    let mut prev: Option<(f64, f64)> = None;
    for s in 0..n_scan {
        let lam = lo + (hi - lo) * s as f64 / (n_scan - 1) as f64;
        let dk = delta_k_contour(process, lambda_p, lam, tables, ctx)?;
        if dk.abs() < opts.tolerance_rad_m {
            near_zero += 1;
        }
        if let Some((plam, pdk)) = prev {
            if pdk == 0.0 {
                roots.push(plam);
            } else if pdk * dk < 0.0 {
                // bisect to the requested λ width and |Δk| below tolerance
                let (mut a, mut b) = (plam, lam);
                let mut fa = pdk;
                let mut best = (0.5 * (a + b), f64::INFINITY);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = delta_k_contour(process, lambda_p, mid, tables, ctx)?;
                    if fm.abs() < best.1 {
                        best = (mid, fm.abs());
                    }
                    if (b - a) < opts.bisect_nm * 1e-3 && best.1 < opts.tolerance_rad_m {
                        break;
                    }
                    if fa * fm <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                        fa = fm;
                    }
                }
                roots.push(best.0);
            }
        }
        prev = Some((lam, dk));
    }
    Ok((roots, near_zero as f64 / n_scan as f64))
}

/// Traces phase-matching branches of one process over a pump range.
///
/// Roots are found per pump column, then linked across adjacent columns by
/// nearest-neighbor continuation (threshold 3× the idler scan spacing).
/// An artificial table satisfying Δk ≈ 0 everywhere is reported as a
/// degenerate-dispersion error rather than an infinity of branches.
pub fn trace_contours(
    process: ProcessId,
    tables: &DispersionPair,
    ctx: &NonlinearContext,
    opts: &ContourOptions,
) -> Result<Vec<PhasematchBranch>> {
    if opts.n_pump < 2 || opts.n_idler < 8 {
        return Err(Error::config("contour tracing needs n_pump >= 2, n_idler >= 8"));
    }
    ctx.validate()?;
    let (p_lo, p_hi) = opts.lambda_p_um;
    if !(p_hi > p_lo) {
        return Err(Error::config("empty pump range"));
    }

    let link_threshold = 3.0 * (opts.lambda_i_um.1 - opts.lambda_i_um.0) / opts.n_idler as f64;

    let mut chains: Vec<Chain> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut degenerate_columns = 0usize;
    let mut total_columns = 0usize;

    for step in 0..opts.n_pump {
        let lambda_p = p_lo + (p_hi - p_lo) * step as f64 / (opts.n_pump - 1) as f64;
        let at_pump_edge = step == 0 || step == opts.n_pump - 1;
        let Some((lo, hi, degen_hi)) = feasible_interval(opts, tables, lambda_p) else {
            // the whole column is infeasible: terminate active chains
            for &ci in &active {
                chains[ci].stop_end = Some(BranchEnd::Window);
            }
            active.clear();
            continue;
        };
        total_columns += 1;
        let (roots, near_frac) =
            column_roots(process, lambda_p, (lo, hi), opts.n_idler, opts, tables, ctx)?;
        if near_frac > 0.5 {
            degenerate_columns += 1;
        }

        // link roots to active chains by nearest last-point distance
        let mut claimed = vec![false; roots.len()];
        let mut next_active: Vec<usize> = Vec::new();
        for &ci in &active {
            let last = chains[ci].points.last().unwrap().lambda_i_um;
            let mut best: Option<(usize, f64)> = None;
            for (ri, &r) in roots.iter().enumerate() {
                if claimed[ri] {
                    continue;
                }
                let d = (r - last).abs();
                if d <= link_threshold && best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((ri, d));
                }
            }
            match best {
                Some((ri, _)) => {
                    claimed[ri] = true;
                    chains[ci].points.push(TracedPoint {
                        lambda_p_um: lambda_p,
                        lambda_s_um: conjugate_lambda(lambda_p, roots[ri]),
                        lambda_i_um: roots[ri],
                    });
                    next_active.push(ci);
                }
                None => {
                    // chain ends: classify by where its last point sat
                    let end = classify_end(
                        chains[ci].points.last().unwrap(),
                        lo,
                        hi,
                        degen_hi,
                        link_threshold,
                        at_pump_edge,
                    );
                    chains[ci].stop_end = Some(end);
                }
            }
        }
        // unclaimed roots start new chains
        for (ri, &r) in roots.iter().enumerate() {
            if claimed[ri] {
                continue;
            }
            let pt = TracedPoint {
                lambda_p_um: lambda_p,
                lambda_s_um: conjugate_lambda(lambda_p, r),
                lambda_i_um: r,
            };
            let start = classify_end(&pt, lo, hi, degen_hi, link_threshold, step == 0);
            chains.push(Chain {
                points: vec![pt],
                start_end: start,
                stop_end: None,
            });
            next_active.push(chains.len() - 1);
        }
        active = next_active;
    }
    for &ci in &active {
        chains[ci].stop_end = Some(BranchEnd::PumpRange);
    }

    if total_columns > 0 && degenerate_columns * 2 > total_columns {
        return Err(Error::Numeric(format!(
            "degenerate dispersion: {degenerate_columns}/{total_columns} pump columns are \
             phase-matched everywhere (|dk| < tolerance)"
        )));
    }

    // merge chain pairs that terminate in a tip at the same pump column
    let merged = merge_tips(chains, link_threshold);

    Ok(merged
        .into_iter()
        .map(|c| {
            let ends = (c.start_end, c.stop_end.unwrap_or(BranchEnd::PumpRange));
            let closed = matches!(
                ends,
                (BranchEnd::Degeneracy, BranchEnd::Degeneracy)
                    | (BranchEnd::Tip, BranchEnd::Tip)
            );
            let truncated = matches!(ends.0, BranchEnd::Window | BranchEnd::PumpRange)
                || matches!(ends.1, BranchEnd::Window | BranchEnd::PumpRange);
            PhasematchBranch {
                process,
                closed,
                truncated,
                points: c.points,
                ends,
            }
        })
        .collect())
}

fn classify_end(
    pt: &TracedPoint,
    lo: f64,
    hi: f64,
    degen_hi: bool,
    threshold: f64,
    at_pump_edge: bool,
) -> BranchEnd {
    if at_pump_edge {
        return BranchEnd::PumpRange;
    }
    let li = pt.lambda_i_um;
    if (hi - li).abs() < 2.0 * threshold {
        if degen_hi {
            BranchEnd::Degeneracy
        } else {
            BranchEnd::Window
        }
    } else if (li - lo).abs() < 2.0 * threshold {
        BranchEnd::Window
    } else {
        BranchEnd::Tip
    }
}

/// Joins chains whose interior endpoints are two roots merging at a
/// contour turning point: same terminal pump column, nearby λ_i.
fn merge_tips(mut chains: Vec<Chain>, threshold: f64) -> Vec<Chain> {
    loop {
        let mut merged_any = false;
        'outer: for i in 0..chains.len() {
            for j in (i + 1)..chains.len() {
                if chains[i].points.is_empty() || chains[j].points.is_empty() {
                    continue;
                }
                let (join, flip_j) = {
                    let a = &chains[i];
                    let b = &chains[j];
                    let tip_pair = |pa: &TracedPoint, pb: &TracedPoint| {
                        (pa.lambda_p_um - pb.lambda_p_um).abs() < 1e-12
                            && (pa.lambda_i_um - pb.lambda_i_um).abs() < 6.0 * threshold
                    };
                    // ends qualify only when both are genuine tips
                    let a_end_tip = a.stop_end == Some(BranchEnd::Tip);
                    let b_end_tip = b.stop_end == Some(BranchEnd::Tip);
                    let a_start_tip = a.start_end == BranchEnd::Tip;
                    let b_start_tip = b.start_end == BranchEnd::Tip;
                    if a_end_tip && b_end_tip && tip_pair(a.points.last().unwrap(), b.points.last().unwrap()) {
                        (true, true) // append reversed b
                    } else if a_start_tip && b_start_tip
                        && tip_pair(&a.points[0], &b.points[0])
                    {
                        (true, false) // prepend reversed b
                    } else {
                        (false, false)
                    }
                };
                if join {
                    let b = chains.remove(j);
                    let a = &mut chains[i];
                    if flip_j {
                        // a: start…tip + b: tip…start(reversed)
                        let mut pts = b.points;
                        pts.reverse();
                        a.points.extend(pts);
                        a.stop_end = Some(b.start_end);
                    } else {
                        let mut pts: Vec<TracedPoint> = b.points;
                        pts.reverse();
                        pts.extend(a.points.drain(..));
                        a.points = pts;
                        a.start_end = b.stop_end.unwrap_or(BranchEnd::PumpRange);
                    }
                    merged_any = true;
                    break 'outer;
                }
            }
        }
        if !merged_any {
            return chains;
        }
    }
}

/// Idler-window roots of Δk = 0 at a single pump wavelength.
///
/// The scan window is intersected with the dispersion-table reach and the
/// degeneracy exclusion exactly as in branch tracing.
pub fn idler_roots_at_pump(
    process: ProcessId,
    lambda_p_um: f64,
    tables: &DispersionPair,
    ctx: &NonlinearContext,
    opts: &ContourOptions,
) -> Result<Vec<f64>> {
    ctx.validate()?;
    let Some((lo, hi, _)) = feasible_interval(opts, tables, lambda_p_um) else {
        return Ok(Vec::new());
    };
    let (roots, near_frac) = column_roots(
        process,
        lambda_p_um,
        (lo, hi),
        opts.n_idler,
        opts,
        tables,
        ctx,
    )?;
    if near_frac > 0.5 {
        return Err(Error::Numeric(
            "degenerate dispersion: the whole idler window is phase-matched".into(),
        ));
    }
    Ok(roots)
}

/// JSON export of branches: {process, closed, points: [...]}.
#[derive(Serialize)]
struct BranchJson<'a> {
    process: String,
    closed: bool,
    truncated: bool,
    points: &'a [TracedPoint],
}

pub fn branches_to_json(branches: &[PhasematchBranch]) -> Result<String> {
    let rows: Vec<BranchJson> = branches
        .iter()
        .map(|b| BranchJson {
            process: b.process.to_string(),
            closed: b.closed,
            truncated: b.truncated,
            points: &b.points,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)?)
}

/// Companion CSV flattening for plotting tools.
pub fn branches_to_csv(branches: &[PhasematchBranch]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["process", "branch", "closed", "lambda_p_um", "lambda_s_um", "lambda_i_um"])?;
    for (bi, b) in branches.iter().enumerate() {
        for p in &b.points {
            w.write_record([
                b.process.to_string(),
                bi.to_string(),
                b.closed.to_string(),
                p.lambda_p_um.to_string(),
                p.lambda_s_um.to_string(),
                p.lambda_i_um.to_string(),
            ])?;
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::numeric(e.to_string()))?)
        .map_err(|e| Error::numeric(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modesolver::DispersionTable;
    use crate::sfwm::Polarization;

    #[test]
    fn degenerate_linear_dispersion_is_flagged() {
        let omegas: Vec<f64> = (0..64)
            .map(|i| 1.5e15 + i as f64 * 0.05e15)
            .collect();
        let c0 = 4.8e-9;
        let mk = |pol| {
            DispersionTable::from_columns(
                pol,
                omegas.clone(),
                omegas.iter().map(|&w| c0 * w).collect(),
                omegas.iter().map(|_| 1.44).collect(),
                omegas.iter().map(|_| 1.0 / c0).collect(),
                omegas.iter().map(|_| 2.0).collect(),
            )
            .unwrap()
        };
        let pair = DispersionPair {
            x: mk(Polarization::X),
            y: mk(Polarization::Y),
        };
        let opts = ContourOptions {
            lambda_p_um: (0.75, 0.85),
            lambda_i_um: (0.55, 0.72),
            n_pump: 24,
            n_idler: 64,
            ..ContourOptions::default()
        };
        let err = trace_contours(ProcessId::A, &pair, &NonlinearContext::disabled(), &opts);
        assert!(err.is_err());
        let msg = format!("{}", err.unwrap_err());
        assert!(msg.contains("degenerate"), "got: {msg}");
    }

    #[test]
    fn energy_conservation_exact_on_points() {
        // synthetic quartic dispersion: the detuning root sits at
        // Ω² = |c2|/c4 − 6(ω_p − w0)², inside the idler window
        let omegas: Vec<f64> = (0..64).map(|i| 1.2e15 + i as f64 * 0.06e15).collect();
        let w0 = 2.4e15;
        let c2 = -1.4e-26;
        let c4 = 3.9e-56;
        let mk = |pol| {
            DispersionTable::from_columns(
                pol,
                omegas.clone(),
                omegas
                    .iter()
                    .map(|&w| {
                        let d = w - w0;
                        4.8e-9 * w + c2 * d * d + c4 * d * d * d * d
                    })
                    .collect(),
                omegas.iter().map(|_| 1.44).collect(),
                omegas.iter().map(|_| 2.08e8).collect(),
                omegas.iter().map(|_| 2.0).collect(),
            )
            .unwrap()
        };
        let pair = DispersionPair {
            x: mk(Polarization::X),
            y: mk(Polarization::Y),
        };
        let opts = ContourOptions {
            lambda_p_um: (0.76, 0.80),
            lambda_i_um: (0.55, 0.75),
            n_pump: 16,
            n_idler: 300,
            ..ContourOptions::default()
        };
        let ctx = NonlinearContext::disabled();
        let branches = trace_contours(ProcessId::A, &pair, &ctx, &opts).unwrap();
        for b in &branches {
            for p in &b.points {
                let lhs = 2.0 / p.lambda_p_um;
                let rhs = 1.0 / p.lambda_s_um + 1.0 / p.lambda_i_um;
                assert!((lhs - rhs).abs() < 1e-12 * lhs, "energy conservation violated");
                // and every point satisfies |dk| < tolerance after re-evaluation
                let dk =
                    delta_k_contour(b.process, p.lambda_p_um, p.lambda_i_um, &pair, &ctx).unwrap();
                assert!(dk.abs() < opts.tolerance_rad_m * 1.5, "dk = {dk}");
            }
        }
    }
}
