//! Whole-trajectory experiments: level counts, new-point densities,
//! containment in the scaled rate sets, and fill-in of their lattice points.

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use super::stats::mean_stderr;
use super::ExperimentPlan;
use crate::constants::DimensionConstants;
use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, WalkConfig, Walker};
use crate::rate::{enumerate_scaled_lattice, RateSet, RateSetDescriptor};
use crate::report::{fmt_sig, ExperimentReport, Provenance};
use crate::tally::{BoardSummary, TallyBoard};

/// Levels `k = 1..=LEVEL_COUNT_K_MAX` are compared with their limits.
pub const LEVEL_COUNT_K_MAX: u64 = 4;

fn constants_for(plan: &ExperimentPlan) -> Result<DimensionConstants> {
    plan.validate()?;
    DimensionConstants::compute(plan.dimension)
}

fn config(plan: &ExperimentPlan, horizon: u64, r: u64) -> Result<WalkConfig> {
    WalkConfig::new(plan.dimension, horizon, plan.seed, r)
}

fn finish(mut report: ExperimentReport, plan: &ExperimentPlan) -> ExperimentReport {
    if plan.replications < 2 {
        report.demote_to_diagnostic("a single replication has no standard error; no verdicts");
    }
    report
}

/// `Q(k, n) / n` against `gamma^2 (1 - gamma)^(k-1)` within the plan's
/// relative tolerance (default 5%), successive ratios against
/// `1 / (1 - gamma)` within 10%, and conservation `sum_k k Q(k, n) = n`.
pub fn run_level_count_check(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    let c = constants_for(plan)?;
    let tol = plan.relative_tolerance.unwrap_or(0.05);
    let n = plan.horizon;
    let summaries: Vec<BoardSummary> = (0..plan.replications)
        .into_par_iter()
        .map(|r| Ok(TallyBoard::from_walk_fast(&config(plan, n, r)?)?.summary()))
        .collect::<Result<_>>()?;
    let pooled = summaries
        .iter()
        .fold(BoardSummary::default(), |acc, s| acc.merge(s));

    let mut metadata = plan.metadata();
    metadata.insert("check".into(), "level_counts".into());
    let mut report = ExperimentReport::new(plan.name.clone(), metadata);

    let conserved = summaries
        .iter()
        .all(|s| s.q.iter().map(|(k, q)| k * q).sum::<u64>() == s.steps);
    report.judge(
        "conservation",
        conserved,
        Some(Provenance::Identity),
        "sum_k k Q(k, n) = n on every replication",
    );

    let g = c.gamma;
    for k in 1..=LEVEL_COUNT_K_MAX {
        let per_rep: Vec<f64> = summaries
            .iter()
            .map(|s| *s.q.get(&k).unwrap_or(&0) as f64 / n as f64)
            .collect();
        let m = mean_stderr(&per_rep);
        let reference = g * g * (1.0 - g).powi(k as i32 - 1);
        report.check_band(
            &format!("q_over_n[{k}]"),
            m.mean,
            m.stderr,
            reference,
            Provenance::ConstantsOracle,
            tol * reference,
            format!("|est / ref - 1| <= {}", fmt_sig(tol)),
        );
    }
    for k in 1..LEVEL_COUNT_K_MAX {
        let a = *pooled.q.get(&k).unwrap_or(&0) as f64;
        let b = *pooled.q.get(&(k + 1)).unwrap_or(&0) as f64;
        let ratio = if b > 0.0 { a / b } else { f64::INFINITY };
        let reference = 1.0 / (1.0 - g);
        report.check_band(
            &format!("q_ratio[{k}]"),
            ratio,
            None,
            reference,
            Provenance::ConstantsOracle,
            0.1 * reference,
            "|Q(k) / Q(k+1) (1 - gamma) - 1| <= 0.1 on pooled counts".into(),
        );
    }
    let distinct: Vec<f64> = summaries
        .iter()
        .map(|s| s.distinct_sites as f64 / n as f64)
        .collect();
    let m = mean_stderr(&distinct);
    report.diagnose_band(
        "distinct_sites_over_n",
        m.mean,
        m.stderr,
        g,
        Provenance::ConstantsOracle,
        (m.mean / g - 1.0).abs() <= tol,
        format!(
            "range density near gamma, |est / ref - 1| <= {}",
            fmt_sig(tol)
        ),
    );
    Ok(finish(report, plan))
}

/// `zeta_n / n` against `1 - 2 alpha` and `nu_n / n` against
/// `1 - p - 1/(2d)`, within the plan's relative tolerance (default 1%).
pub fn run_newpoint_check(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    let c = constants_for(plan)?;
    let tol = plan.relative_tolerance.unwrap_or(0.01);
    let n = plan.horizon;
    let counters: Vec<(f64, f64)> = (0..plan.replications)
        .into_par_iter()
        .map(|r| {
            let board = TallyBoard::from_walk(&config(plan, n, r)?)?;
            let np = board.new_point_counters();
            Ok((np.zeta as f64 / n as f64, np.nu as f64 / n as f64))
        })
        .collect::<Result<_>>()?;
    let mut metadata = plan.metadata();
    metadata.insert("check".into(), "new_points".into());
    let mut report = ExperimentReport::new(plan.name.clone(), metadata);
    let zeta: Vec<f64> = counters.iter().map(|x| x.0).collect();
    let nu: Vec<f64> = counters.iter().map(|x| x.1).collect();
    for (label, xs, reference) in [
        ("zeta_over_n", zeta, c.pair_escape()),
        ("nu_over_n", nu, c.sphere_escape()),
    ] {
        let m = mean_stderr(&xs);
        report.check_band(
            label,
            m.mean,
            m.stderr,
            reference,
            Provenance::ConstantsOracle,
            tol * reference,
            format!("|est / ref - 1| <= {}", fmt_sig(tol)),
        );
    }
    Ok(finish(report, plan))
}

#[derive(Debug, Clone, Copy, Default)]
struct Containment {
    pairs_b: u64,
    violations_b: u64,
    max_rate_b: f64,
    pairs_d: u64,
    violations_d: u64,
    max_rate_d: f64,
    max_local: f64,
    max_ball: f64,
    eta: Option<f64>,
}

/// Checks that every observed pair lies in `((1 + eps) log n) B` (neighbor
/// pairs along every axis) and `((1 + eps) log n) D` (center and sphere), and
/// reports `xi(n)`, `Xi*(S(1), n)` and, when `cap > horizon`, `eta(n)`, each
/// over `log n`. All verdicts are diagnostic.
pub fn run_containment_check(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    let c = constants_for(plan)?;
    let n = plan.horizon;
    if n < 2 {
        return Err(Error::Plan(
            "containment needs a horizon of at least 2".into(),
        ));
    }
    let log_n = (n as f64).ln();
    let scale = (1.0 + plan.epsilon) * log_n;
    let b = RateSetDescriptor::new(RateSet::B, c.clone());
    let d = RateSetDescriptor::new(RateSet::D, c.clone());
    let sphere = LatticePoint::unit_sphere(plan.dimension);
    let runs: Vec<Containment> = (0..plan.replications)
        .into_par_iter()
        .map(|r| {
            let board = TallyBoard::from_walk_fast(&config(plan, n, r)?)?;
            let mut out = Containment::default();
            for (k, l) in board.neighbor_pairs() {
                let rate = b.rate(k as f64 / scale, l as f64 / scale)?;
                out.pairs_b += 1;
                out.max_rate_b = out.max_rate_b.max(rate);
                if rate > 1.0 {
                    out.violations_b += 1;
                }
            }
            for (k, l) in board.point_ball_pairs() {
                out.pairs_d += 1;
                // Outside the domain of f (sphere count below center count)
                // counts as a violation.
                let rate = if l < k {
                    f64::INFINITY
                } else {
                    d.rate(k as f64 / scale, l as f64 / scale)?
                };
                out.max_rate_d = out.max_rate_d.max(rate);
                if rate > 1.0 {
                    out.violations_d += 1;
                }
            }
            out.max_local = board.max_local_time() as f64 / log_n;
            out.max_ball = board.max_occupation_over_translates(&sphere) as f64 / log_n;
            if plan.cap > n {
                let cap_board = TallyBoard::from_walk_fast(&config(plan, plan.cap, r)?)?;
                out.eta = Some(cap_board.eta_at(n)? as f64 / log_n);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut metadata = plan.metadata();
    metadata.insert("check".into(), "containment".into());
    metadata.insert("scale".into(), fmt_sig(scale));
    let mut report = ExperimentReport::new(plan.name.clone(), metadata);
    for (set, violations, pairs, max_rate) in [
        (
            "B",
            runs.iter().map(|r| r.violations_b).sum::<u64>(),
            runs.iter().map(|r| r.pairs_b).sum::<u64>(),
            runs.iter().map(|r| r.max_rate_b).fold(0.0, f64::max),
        ),
        (
            "D",
            runs.iter().map(|r| r.violations_d).sum::<u64>(),
            runs.iter().map(|r| r.pairs_d).sum::<u64>(),
            runs.iter().map(|r| r.max_rate_d).fold(0.0, f64::max),
        ),
    ] {
        let label = format!("containment.{set}.violations");
        report.diagnose_band(
            &label,
            violations as f64,
            None,
            0.0,
            Provenance::ConstantsOracle,
            violations == 0,
            format!("no pair outside ((1 + eps) log n) {set}; {pairs} pairs checked"),
        );
        let label = format!("containment.{set}.max_rate");
        report.diagnose_band(
            &label,
            max_rate,
            None,
            1.0,
            Provenance::ConstantsOracle,
            max_rate <= 1.0,
            "largest rate at scale (1 + eps) log n stays <= 1".into(),
        );
    }

    let local: Vec<f64> = runs.iter().map(|r| r.max_local).collect();
    let m = mean_stderr(&local);
    let worst = local.iter().copied().fold(0.0, f64::max);
    report.diagnose_band(
        "max_local_time_over_log_n",
        m.mean,
        m.stderr,
        c.lambda,
        Provenance::ConstantsOracle,
        worst <= (1.0 + plan.epsilon) * c.lambda,
        "every replication <= (1 + eps) lambda".into(),
    );
    let ball: Vec<f64> = runs.iter().map(|r| r.max_ball).collect();
    let m = mean_stderr(&ball);
    let (lo, hi) = ball.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    report.diagnose_band(
        "max_sphere_occupation_over_log_n",
        m.mean,
        m.stderr,
        c.kappa,
        Provenance::ConstantsOracle,
        lo >= 1.0 && hi <= 1.6 * c.kappa,
        "every replication in [1, 1.6 kappa]".into(),
    );
    if runs.iter().all(|r| r.eta.is_some()) {
        let eta: Vec<f64> = runs.iter().filter_map(|r| r.eta).collect();
        let m = mean_stderr(&eta);
        let (lo, hi) = eta.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        report.diagnose_band(
            "eta_over_log_n",
            m.mean,
            m.stderr,
            c.lambda,
            Provenance::ConstantsOracle,
            lo >= 0.5 * c.lambda && hi <= 1.5 * c.lambda,
            format!(
                "every replication in [0.5 lambda, 1.5 lambda]; cap {}",
                plan.cap
            ),
        );
    }
    Ok(finish_diagnostic(report, plan))
}

fn finish_diagnostic(mut report: ExperimentReport, plan: &ExperimentPlan) -> ExperimentReport {
    if plan.replications < 2 {
        report
            .notes
            .push("a single replication has no standard error".into());
    }
    report
}

/// Fractions of the target pairs realized at each checkpoint of one walk.
fn realized_fractions(
    plan: &ExperimentPlan,
    r: u64,
    checkpoints: &[u64],
    targets_b: &[(u64, u64)],
    targets_d: &[(u64, u64)],
) -> Result<Vec<(f64, f64)>> {
    let horizon = *checkpoints.last().expect("checkpoints");
    let mut board = TallyBoard::new(plan.dimension, horizon)?.without_new_points();
    let mut walker = Walker::new(plan.dimension, plan.seed, r);
    let e1 = LatticePoint::unit(plan.dimension, 1);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        board.advance(&mut walker, t - board.steps_consumed())?;
        let neighbor: FxHashSet<(u64, u64)> = board
            .visited()
            .map(|(z, xi)| (xi, board.local_time(&z.add(&e1))))
            .collect();
        let ball: FxHashSet<(u64, u64)> = board.point_ball_pairs().into_iter().collect();
        // Pairs are realized with the index shift of the fill-in statement:
        // (k + 1, l) for B and (k, l + 1) for D.
        let hit_b = targets_b
            .iter()
            .filter(|&&(k, l)| neighbor.contains(&(k + 1, l)))
            .count();
        let hit_d = targets_d
            .iter()
            .filter(|&&(k, l)| ball.contains(&(k, l + 1)))
            .count();
        out.push((
            hit_b as f64 / targets_b.len() as f64,
            hit_d as f64 / targets_d.len() as f64,
        ));
    }
    Ok(out)
}

/// One target pair of the fill-in sets and whether one walk realized it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillInRow {
    pub set: RateSet,
    pub k: u64,
    pub l: u64,
    pub realized: bool,
}

/// Every integer pair of `((1 - eps) log n) B` and `... D`, with whether
/// replication 0 of the plan realized it by time `n` (same index shift as
/// [`run_fillin_check`]). Rows are ordered by set, then `k`, then `l`.
pub fn fill_in_table(plan: &ExperimentPlan) -> Result<Vec<FillInRow>> {
    let c = constants_for(plan)?;
    let scale = fill_in_scale(plan)?;
    let mut board = TallyBoard::new(plan.dimension, plan.horizon)?.without_new_points();
    board.advance(&mut Walker::new(plan.dimension, plan.seed, 0), plan.horizon)?;
    let e1 = LatticePoint::unit(plan.dimension, 1);
    let neighbor: FxHashSet<(u64, u64)> = board
        .visited()
        .map(|(z, xi)| (xi, board.local_time(&z.add(&e1))))
        .collect();
    let ball: FxHashSet<(u64, u64)> = board.point_ball_pairs().into_iter().collect();
    let mut rows = Vec::new();
    for set in [RateSet::B, RateSet::D] {
        for (k, l) in enumerate_scaled_lattice(&RateSetDescriptor::new(set, c.clone()), scale)? {
            let realized = match set {
                RateSet::B => neighbor.contains(&(k + 1, l)),
                RateSet::D => ball.contains(&(k, l + 1)),
            };
            rows.push(FillInRow {
                set,
                k,
                l,
                realized,
            });
        }
    }
    Ok(rows)
}

fn fill_in_scale(plan: &ExperimentPlan) -> Result<f64> {
    if plan.epsilon.is_nan() || plan.epsilon >= 1.0 {
        return Err(Error::Plan(format!(
            "fill-in needs epsilon in (0, 1), got {}",
            plan.epsilon
        )));
    }
    let scale = (1.0 - plan.epsilon) * (plan.horizon as f64).ln();
    if scale <= 0.0 {
        return Err(Error::Plan("fill-in needs a horizon of at least 2".into()));
    }
    Ok(scale)
}

/// Enumerates `((1 - eps) log n) B` and `... D` and reports the fraction of
/// their integer pairs realized by the walk, at horizons `n/4`, `n/2` and `n`
/// of the same trajectory (target sets fixed at the final `n`). Diagnostic
/// expectations: fraction of `B` at `n` at least 0.9, and fractions
/// nondecreasing along the checkpoints.
pub fn run_fillin_check(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    let c = constants_for(plan)?;
    let n = plan.horizon;
    let scale = fill_in_scale(plan)?;
    let targets_b =
        enumerate_scaled_lattice(&RateSetDescriptor::new(RateSet::B, c.clone()), scale)?;
    let targets_d =
        enumerate_scaled_lattice(&RateSetDescriptor::new(RateSet::D, c.clone()), scale)?;
    let mut checkpoints: Vec<u64> = vec![n / 4, n / 2, n];
    checkpoints.retain(|&t| t > 0);
    checkpoints.dedup();

    let runs: Vec<Vec<(f64, f64)>> = (0..plan.replications)
        .into_par_iter()
        .map(|r| realized_fractions(plan, r, &checkpoints, &targets_b, &targets_d))
        .collect::<Result<_>>()?;

    let mut metadata = plan.metadata();
    metadata.insert("check".into(), "fill_in".into());
    metadata.insert("scale".into(), fmt_sig(scale));
    metadata.insert("targets.B".into(), targets_b.len().to_string());
    metadata.insert("targets.D".into(), targets_d.len().to_string());
    metadata.insert(
        "checkpoints".into(),
        checkpoints
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    let mut report = ExperimentReport::new(plan.name.clone(), metadata);
    for (set, pick) in [("B", 0usize), ("D", 1usize)] {
        let value = |x: &(f64, f64)| if pick == 0 { x.0 } else { x.1 };
        for (i, &t) in checkpoints.iter().enumerate() {
            let xs: Vec<f64> = runs.iter().map(|run| value(&run[i])).collect();
            let m = mean_stderr(&xs);
            let label = format!("fill_in.{set}.fraction[n={t}]");
            report.estimate(&label, m.mean, m.stderr);
            if t == n && set == "B" {
                report.note_band(&label, m.mean >= 0.9, None, "mean realized fraction >= 0.9");
            }
        }
        let monotone = runs
            .iter()
            .all(|run| run.windows(2).all(|w| value(&w[1]) >= value(&w[0])));
        report.note_band(
            format!("fill_in.{set}.monotone"),
            monotone,
            None,
            "realized fraction nondecreasing along the checkpoints of every replication",
        );
    }
    Ok(finish_diagnostic(report, plan))
}
