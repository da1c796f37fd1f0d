//! Empirical occupation laws at the origin against the exact laws.

use rayon::prelude::*;

use super::occupation::{sample_origin, truncation_bound, Completion, FirstOfPair, OriginSample};
use super::stats::{chi_square, proportion_stderr};
use super::ExperimentPlan;
use crate::constants::DimensionConstants;
use crate::distributions::{point_ball_upper_bound, two_point_upper_bound, PmfKind, PmfSpec};
use crate::error::{Error, Result};
use crate::report::{fmt_sig, ExperimentReport, Provenance};

/// Cells up to this order enter the chi-square tests (plus one remainder).
const CELL_ORDER: u64 = 6;
/// Cells up to this order are checked against the truncated upper bounds.
const BOUND_ORDER: u64 = 10;
const MIN_EXPECTED: f64 = 5.0;

/// One law's observation: which cell of the law a sample falls into.
fn observe(kind: PmfKind, s: &OriginSample, truncated: bool) -> [u64; 2] {
    let c = if truncated { s.truncated } else { s.completed };
    match kind {
        PmfKind::GeometricSite => [c.origin, 0],
        PmfKind::JointTwoPoint => [c.origin, c.neighbor],
        PmfKind::BallOccupation => [c.sphere, 0],
        // (xi(0), Xi(0) - 1); Xi(0) >= 1 since the first step lands on S(1).
        PmfKind::JointPointBall => [c.origin, c.sphere.saturating_sub(1)],
    }
}

/// Cells tested for a law, in a fixed order. The remainder is implicit.
fn cells(kind: PmfKind) -> Vec<[u64; 2]> {
    match kind {
        PmfKind::GeometricSite => (0..=CELL_ORDER).map(|k| [k, 0]).collect(),
        PmfKind::BallOccupation => (1..=CELL_ORDER + 1).map(|j| [j, 0]).collect(),
        PmfKind::JointTwoPoint => (0..=CELL_ORDER)
            .flat_map(|m| (0..=m).map(move |k| [k, m - k]))
            .collect(),
        PmfKind::JointPointBall => (0..=CELL_ORDER)
            .flat_map(|l| (0..=l).map(move |k| [k, l]))
            .collect(),
    }
}

fn cell_label(kind: PmfKind, cell: [u64; 2]) -> String {
    match kind.arity() {
        1 => format!("{}[{}]", kind.name(), cell[0]),
        _ => format!("{}[{},{}]", kind.name(), cell[0], cell[1]),
    }
}

/// [`run_distribution_checks`] for a single law.
pub fn run_distribution_check(plan: &ExperimentPlan, law: &PmfSpec) -> Result<ExperimentReport> {
    run_distribution_checks(plan, &law.constants, &[law.kind])
}

/// Simulates `plan.replications` walks from the origin and compares the
/// occupation counts of `0`, `e_1` and `S(1)` with the requested laws.
///
/// Each walk runs `plan.cap` steps (the truncated sample) and is then
/// completed to the infinite horizon by sampling its future entrances into
/// `{0} ∪ S(1)` from the Green's function. Chi-square tests use the completed
/// samples; the escape frequency and the upper-bound checks use the truncated
/// ones, with the tail bound of the truncation added to the escape band.
pub fn run_distribution_checks(
    plan: &ExperimentPlan,
    constants: &DimensionConstants,
    laws: &[PmfKind],
) -> Result<ExperimentReport> {
    plan.validate()?;
    if constants.d != plan.dimension {
        return Err(Error::DimensionMismatch {
            expected: plan.dimension,
            got: constants.d,
        });
    }
    if plan.cap < 2 * BOUND_ORDER {
        return Err(Error::Plan(format!(
            "cap {} is too small: cells up to order {BOUND_ORDER} need at least {} steps",
            plan.cap,
            2 * BOUND_ORDER
        )));
    }
    let completion = Completion::new(plan.dimension)?;
    let samples: Vec<OriginSample> = (0..plan.replications)
        .into_par_iter()
        .map(|r| sample_origin(plan.dimension, plan.cap, plan.seed, r, Some(&completion)))
        .collect();

    let reps = plan.replications;
    let nf = reps as f64;
    let bound = truncation_bound(plan.dimension, plan.cap);
    let unresolved = samples.iter().filter(|s| s.unresolved).count();
    let mut metadata = plan.metadata();
    metadata.insert("check".into(), "distributions".into());
    metadata.insert("truncation_bound".into(), fmt_sig(bound));
    metadata.insert("completion".into(), "green_function_first_entrance".into());
    metadata.insert("completion.unresolved".into(), unresolved.to_string());
    let mut report = ExperimentReport::new(plan.name.clone(), metadata);

    let gamma = constants.gamma;
    let frac =
        |f: &dyn Fn(&OriginSample) -> bool| samples.iter().filter(|s| f(s)).count() as f64 / nf;

    // Escape: no return to the origin.
    let esc_t = frac(&|s| s.truncated.origin == 0);
    let se_t = proportion_stderr(esc_t, reps);
    report.check_band(
        "escape.truncated",
        esc_t,
        Some(se_t),
        gamma,
        Provenance::ConstantsOracle,
        3.0 * se_t + bound,
        format!(
            "|est - gamma| <= 3 se + truncation bound {}",
            fmt_sig(bound)
        ),
    );
    let esc_c = frac(&|s| s.completed.origin == 0);
    let se_c = proportion_stderr(esc_c, reps);
    report.check_band(
        "escape.completed",
        esc_c,
        Some(se_c),
        gamma,
        Provenance::ConstantsOracle,
        3.0 * se_c,
        "|est - gamma| <= 3 se".into(),
    );

    for &kind in laws {
        let spec = PmfSpec::new(kind, constants.clone());
        law_checks(&mut report, plan, &spec, &samples)?;
        match kind {
            PmfKind::JointTwoPoint => {
                pair_order_checks(&mut report, constants, &samples);
                bound_checks(&mut report, constants, kind, &samples)?;
            }
            PmfKind::JointPointBall => bound_checks(&mut report, constants, kind, &samples)?,
            _ => {}
        }
    }
    if unresolved > 0 {
        report.notes.push(format!(
            "{unresolved} completions hit the re-entry limit and were cut short"
        ));
    }
    if reps < 2 {
        report.demote_to_diagnostic("a single replication has no standard error; no verdicts");
    }
    Ok(report)
}

fn law_checks(
    report: &mut ExperimentReport,
    plan: &ExperimentPlan,
    spec: &PmfSpec,
    samples: &[OriginSample],
) -> Result<()> {
    let kind = spec.kind;
    let reps = samples.len() as u64;
    let cells = cells(kind);
    let mut observed = vec![0u64; cells.len() + 1];
    for s in samples {
        let o = observe(kind, s, false);
        match cells
            .iter()
            .position(|c| c[..kind.arity()] == o[..kind.arity()])
        {
            Some(i) => observed[i] += 1,
            None => *observed.last_mut().expect("remainder") += 1,
        }
    }
    let mut probabilities = Vec::with_capacity(cells.len() + 1);
    for c in &cells {
        probabilities.push(spec.probability(&c[..kind.arity()])?);
    }
    probabilities.push((1.0 - probabilities.iter().sum::<f64>()).max(0.0));

    let mut outside = 0;
    for (i, c) in cells.iter().enumerate() {
        let label = cell_label(kind, *c);
        let f = observed[i] as f64 / reps as f64;
        let p = probabilities[i];
        let se = proportion_stderr(p, reps);
        report.estimate(&label, f, Some(proportion_stderr(f, reps)));
        report.reference(&label, p, Provenance::ExactLaw);
        if (f - p).abs() > 3.0 * se {
            outside += 1;
        }
    }
    let label = format!("{}.cell_bands", kind.name());
    report.note_band(
        &label,
        outside == 0,
        Some(Provenance::ExactLaw),
        format!(
            "{} of {} cells within 3 se of the exact law",
            cells.len() - outside,
            cells.len()
        ),
    );

    let label = format!("{}.chi_square_p_value", kind.name());
    match chi_square(&observed, &probabilities, MIN_EXPECTED) {
        Some(chi) => {
            report.estimate(&label, chi.p_value, None);
            report.reference(&label, plan.significance, Provenance::ExactLaw);
            report.judge(
                &label,
                chi.p_value >= plan.significance,
                Some(Provenance::ExactLaw),
                format!(
                    "p >= significance; statistic {} on {} dof over {} pooled cells",
                    fmt_sig(chi.statistic),
                    chi.dof,
                    chi.cells
                ),
            );
        }
        None => report.notes.push(format!(
            "{}: too few cells with expected count >= {MIN_EXPECTED} for a chi-square test",
            kind.name()
        )),
    }
    Ok(())
}

/// Which of `0` and `e_1` is reached first: each with probability `alpha`,
/// neither with `1 - 2 alpha`.
fn pair_order_checks(
    report: &mut ExperimentReport,
    constants: &DimensionConstants,
    samples: &[OriginSample],
) {
    let reps = samples.len() as u64;
    let nf = reps as f64;
    let origin_first = samples
        .iter()
        .filter(|s| s.completed_first == FirstOfPair::Origin)
        .count() as f64
        / nf;
    let neighbor_first = samples
        .iter()
        .filter(|s| s.completed_first == FirstOfPair::Neighbor)
        .count() as f64
        / nf;
    for (label, f) in [
        ("first_of_pair.origin", origin_first),
        ("first_of_pair.neighbor", neighbor_first),
    ] {
        let se = proportion_stderr(f, reps);
        report.check_band(
            label,
            f,
            Some(se),
            constants.alpha,
            Provenance::ConstantsOracle,
            3.0 * se,
            "|est - alpha| <= 3 se".into(),
        );
    }
    // Multinomial cells: Var(f1 - f2) = (p1 + p2 - (p1 - p2)^2) / n.
    let diff = origin_first - neighbor_first;
    let se = ((origin_first + neighbor_first - diff * diff) / nf).sqrt();
    report.check_band(
        "first_of_pair.difference",
        diff,
        Some(se),
        0.0,
        Provenance::Identity,
        3.0 * se,
        "|origin first - neighbor first| <= 3 se".into(),
    );
}

/// Truncated-walk cell frequencies never exceed the horizon-uniform upper
/// bounds (beyond sampling noise).
fn bound_checks(
    report: &mut ExperimentReport,
    constants: &DimensionConstants,
    kind: PmfKind,
    samples: &[OriginSample],
) -> Result<()> {
    let reps = samples.len() as u64;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut checked = 0;
    let mut violations = 0;
    let cells: Vec<(u64, u64)> = match kind {
        PmfKind::JointTwoPoint => (0..=BOUND_ORDER)
            .flat_map(|m| (0..=m).map(move |k| (k, m - k)))
            .collect(),
        _ => (0..=BOUND_ORDER)
            .flat_map(|l| (0..=l).map(move |k| (k, l)))
            .collect(),
    };
    let mut counts = std::collections::HashMap::new();
    for s in samples {
        let o = observe(kind, s, true);
        *counts.entry((o[0], o[1])).or_insert(0u64) += 1;
    }
    for (k, l) in cells {
        let b = match kind {
            PmfKind::JointTwoPoint => two_point_upper_bound(constants, k, l),
            _ => point_ball_upper_bound(constants, k, l)?,
        };
        let f = *counts.get(&(k, l)).unwrap_or(&0) as f64 / reps as f64;
        let se = proportion_stderr(f, reps);
        checked += 1;
        worst = worst.max(f - b);
        if f > b + 3.0 * se {
            violations += 1;
        }
    }
    let label = format!("{}.truncated_bound_excess", kind.name());
    report.estimate(&label, worst, None);
    report.reference(&label, 0.0, Provenance::ExactLaw);
    report.judge(
        &label,
        violations == 0,
        Some(Provenance::ExactLaw),
        format!(
            "frequency <= bound + 3 se on all {checked} cells of order <= {BOUND_ORDER}; estimate is max(frequency - bound)"
        ),
    );
    Ok(())
}
