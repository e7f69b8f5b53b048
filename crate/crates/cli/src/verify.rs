//! Property suite behind `starsis verify`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use starlike_sis::fixedpoint::{
    classify_regime, count_sign_changes, critical_b, phi_middle, solve_fixed_point, RegimeKind,
    SolverOptions,
};
use starlike_sis::geometry::{
    curve_curvature, in_region_one, slopes_at_zero, strict_decrease_check, CONVEXITY_TOL,
};
use starlike_sis::meanfield::{iterate, sibling_gap, step_full, step_level, IterateOptions};
use starlike_sis::stochastic::{run_trials, step_chain, trial_rng, ChainState};
use starlike_sis::{LevelState, ModelParams, NodeProbState, StarlikeTopology};

use crate::config::{ExperimentConfig, EQ_TOL};
use crate::error::CliError;

/// Relative error allowed between closed-form and finite-difference slopes.
pub const SLOPE_TOL: f64 = 1e-6;
const SAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub a: f64,
    pub b: f64,
    pub branching: Vec<usize>,
    pub regime: RegimeKind,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check {
        name,
        status: if pass { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn skipped(name: &'static str, why: &str) -> Check {
    Check {
        name,
        status: Status::Skipped,
        detail: why.to_string(),
    }
}

fn levels(rng: &mut ChaCha8Rng, k: usize) -> LevelState {
    LevelState::new((0..k).map(|_| rng.gen::<f64>()).collect()).expect("unit draws")
}

fn nodes(rng: &mut ChaCha8Rng, topo: &StarlikeTopology) -> NodeProbState {
    NodeProbState::new(
        (0..topo.node_count()).map(|_| rng.gen::<f64>()).collect(),
        topo,
    )
    .expect("unit draws")
}

struct Ctx<'a> {
    p: ModelParams,
    topo: &'a StarlikeTopology,
    seed: u64,
}

impl Ctx<'_> {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        trial_rng(self.seed, stream)
    }
}

fn range_preservation(c: &Ctx) -> Result<Check, CliError> {
    let mut rng = c.rng(1);
    let k = c.topo.levels();
    let mut ok = true;
    for _ in 0..SAMPLES {
        ok &= step_level(&levels(&mut rng, k), &c.p, c.topo)?
            .as_slice()
            .iter()
            .all(|v| (0.0..=1.0).contains(v));
        ok &= step_full(&nodes(&mut rng, c.topo), &c.p, c.topo)?
            .as_slice()
            .iter()
            .all(|v| (0.0..=1.0).contains(v));
    }
    Ok(check(
        "range_preservation",
        ok,
        format!("{SAMPLES} level and node states"),
    ))
}

fn monotonicity(c: &Ctx) -> Result<Check, CliError> {
    let mut rng = c.rng(2);
    let k = c.topo.levels();
    let mut violations = 0;
    for _ in 0..SAMPLES {
        let lo = levels(&mut rng, k);
        let hi: Vec<f64> = lo
            .as_slice()
            .iter()
            .map(|&x| x + (1.0 - x) * rng.gen::<f64>())
            .collect();
        let f_lo = step_level(&lo, &c.p, c.topo)?;
        let f_hi = step_level(&LevelState::new(hi)?, &c.p, c.topo)?;
        violations += f_lo
            .as_slice()
            .iter()
            .zip(f_hi.as_slice())
            .filter(|(l, h)| l > h)
            .count();
    }
    Ok(check(
        "componentwise_monotonicity",
        violations == 0,
        format!("{violations} violations over {SAMPLES} ordered pairs"),
    ))
}

fn full_vs_reduced(c: &Ctx) -> Result<Check, CliError> {
    let mut rng = c.rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let d = levels(&mut rng, c.topo.levels());
        let via = step_full(&d.expand(c.topo)?, &c.p, c.topo)?.reduce(c.topo)?;
        worst = worst.max(via.sup_distance(&step_level(&d, &c.p, c.topo)?));
    }
    Ok(check(
        "full_vs_reduced",
        worst <= 1e-14,
        format!("max deviation {worst:e}"),
    ))
}

fn round_trip(c: &Ctx) -> Result<Check, CliError> {
    let mut rng = c.rng(4);
    let mut ok = true;
    for _ in 0..SAMPLES {
        let d = levels(&mut rng, c.topo.levels());
        ok &= d.expand(c.topo)?.reduce(c.topo)? == d;
    }
    Ok(check(
        "expand_reduce_round_trip",
        ok,
        format!("{SAMPLES} states"),
    ))
}

fn phi_middle_monotone(c: &Ctx) -> Check {
    let n = *c.topo.branching().get(1).unwrap_or(&c.topo.branching()[0]);
    let grid: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
    let mut violations = 0;
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let v = phi_middle(grid[i], grid[j], &c.p, n);
            if i > 0 && phi_middle(grid[i - 1], grid[j], &c.p, n) > v {
                violations += 1;
            }
            if j > 0 && phi_middle(grid[i], grid[j - 1], &c.p, n) > v {
                violations += 1;
            }
        }
    }
    check(
        "phi_middle_monotone",
        violations == 0,
        format!("100x100 grid, n = {n}, {violations} violations"),
    )
}

fn tie_rule(c: &Ctx) -> Result<Check, CliError> {
    let b_crit = critical_b(c.p.a(), c.topo.branching())?;
    let regime = classify_regime(&c.p, c.topo, EQ_TOL);
    let expected = if (c.p.b() - b_crit).abs() <= EQ_TOL {
        RegimeKind::Critical
    } else if c.p.b() < b_crit {
        RegimeKind::Subcritical
    } else {
        RegimeKind::Supercritical
    };
    let at_crit = classify_regime(&c.p.with_b(b_crit)?, c.topo, EQ_TOL);
    Ok(check(
        "threshold_tie_rule",
        regime.kind == expected && at_crit.kind == RegimeKind::Critical && at_crit.dies_out(),
        format!(
            "b = {}, b_crit = {b_crit}, regime {:?}",
            c.p.b(),
            regime.kind
        ),
    ))
}

fn sign_changes(c: &Ctx) -> Result<Check, CliError> {
    let kind = classify_regime(&c.p, c.topo, EQ_TOL).kind;
    let expected = usize::from(kind == RegimeKind::Supercritical);
    let got = count_sign_changes(&c.p, c.topo, 1e-3, 1.0, 10_000)?;
    Ok(check(
        "curve_gap_sign_changes",
        got == expected,
        format!("{got} sign changes on 1e4 points, expected {expected}"),
    ))
}

fn fixed_point(c: &Ctx, cfg: &ExperimentConfig) -> Check {
    if classify_regime(&c.p, c.topo, EQ_TOL).dies_out() {
        return skipped(
            "fixed_point_agreement",
            "no nontrivial fixed point at or below threshold",
        );
    }
    let opts = SolverOptions {
        max_iter: cfg.max_iter,
        eq_tol: EQ_TOL,
        ..SolverOptions::default()
    };
    match solve_fixed_point(&c.p, c.topo, &opts) {
        Ok(r) => check(
            "fixed_point_agreement",
            r.agreement <= 10.0 * opts.tol,
            format!(
                "agreement {:e}, residuals {:e} / {:e}",
                r.agreement, r.iteration_residual, r.curve_root_residual
            ),
        ),
        Err(e) => check("fixed_point_agreement", false, e.to_string()),
    }
}

fn subcritical_convergence(c: &Ctx) -> Result<Check, CliError> {
    if classify_regime(&c.p, c.topo, EQ_TOL).kind != RegimeKind::Subcritical {
        return Ok(skipped(
            "subcritical_convergence",
            "regime is not subcritical",
        ));
    }
    let traj = iterate(
        &LevelState::ones(c.topo.levels()),
        &c.p,
        c.topo,
        &IterateOptions::default(),
    )?;
    let size = traj.limit.as_slice().iter().fold(0.0f64, |m, v| m.max(*v));
    let monotone = traj.states.windows(2).all(|w| {
        w[1].state
            .as_slice()
            .iter()
            .zip(w[0].state.as_slice())
            .all(|(n, c)| n <= c)
    });
    Ok(check(
        "subcritical_convergence",
        traj.converged && size <= 1e-10 && monotone,
        format!(
            "{} steps from ones, final sup {size:e}, monotone {monotone}",
            traj.iterations
        ),
    ))
}

fn slopes(c: &Ctx, slope_tol: f64) -> Result<Check, CliError> {
    if c.topo.levels() != 3 {
        return Ok(skipped(
            "slope_formulas",
            "closed forms are for three levels",
        ));
    }
    let s = slopes_at_zero(&c.p, c.topo)?;
    let mut pass = s.hub_rel_error() <= slope_tol && s.tail_rel_error() <= slope_tol;
    let mut detail = format!(
        "relative errors {:e} / {:e}, tolerance {slope_tol:e}",
        s.hub_rel_error(),
        s.tail_rel_error()
    );
    if classify_regime(&c.p, c.topo, EQ_TOL).kind == RegimeKind::Critical {
        let tie = (s.hub - s.tail).abs();
        pass &= tie <= 1e-12;
        detail.push_str(&format!("; at threshold |hub - tail| = {tie:e}"));
    }
    Ok(check("slope_formulas", pass, detail))
}

fn curvature(c: &Ctx) -> Result<Check, CliError> {
    let r = curve_curvature(&c.p, c.topo, 2000, CONVEXITY_TOL)?;
    let hub = r.hub_over_hub.min_second_difference;
    let tail = r.tail_over_hub.max_second_difference;
    Ok(check(
        "curve_curvature",
        hub >= -CONVEXITY_TOL && tail <= CONVEXITY_TOL,
        format!("over d1: hub min {hub:e}, tail max {tail:e}"),
    ))
}

fn region_one(c: &Ctx) -> Result<Check, CliError> {
    if c.topo.levels() != 3 {
        return Ok(skipped(
            "region_one_strict_decrease",
            "Region I is defined for three levels",
        ));
    }
    let mut rng = c.rng(5);
    let (mut tested, mut ok) = (0, true);
    for _ in 0..20 * SAMPLES {
        let d = levels(&mut rng, 3);
        if in_region_one(&d, &c.p, c.topo)? {
            tested += 1;
            ok &= strict_decrease_check(&d, &c.p, c.topo)?;
        }
    }
    Ok(check(
        "region_one_strict_decrease",
        ok,
        format!("{tested} Region I points"),
    ))
}

fn sibling_contraction(c: &Ctx) -> Result<Check, CliError> {
    let mut rng = c.rng(6);
    let leaf = c.topo.levels() - 1;
    let mut worst: f64 = 0.0;
    for _ in 0..SAMPLES {
        let s = nodes(&mut rng, c.topo);
        let before = sibling_gap(&s, c.topo)?[leaf];
        let after = sibling_gap(&step_full(&s, &c.p, c.topo)?, c.topo)?[leaf];
        if before > 0.0 {
            worst = worst.max(after / before);
        }
    }
    Ok(check(
        "leaf_sibling_contraction",
        worst <= c.p.a(),
        format!("worst ratio {worst} (bound a = {})", c.p.a()),
    ))
}

fn chain(c: &Ctx) -> Result<Check, CliError> {
    let mut rng = c.rng(7);
    let mut s = ChainState::all_healthy(c.topo);
    let mut absorbing = true;
    for _ in 0..20 {
        s = step_chain(&s, &c.p, c.topo, &mut rng);
        absorbing &= s.is_extinct();
    }
    let init = ChainState::all_infected(c.topo);
    let x = run_trials(&c.p, c.topo, &init, 50, 4, c.seed)?;
    let y = run_trials(&c.p, c.topo, &init, 50, 4, c.seed)?;
    Ok(check(
        "chain_absorbing_and_deterministic",
        absorbing && x == y,
        format!("absorbing {absorbing}, repeat identical {}", x == y),
    ))
}

pub fn run(cfg: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let p = cfg.params()?;
    let ctx = Ctx {
        p,
        topo: &cfg.topo,
        seed: cfg.seed,
    };
    let slope_tol = cfg.tol_or(SLOPE_TOL);
    let checks = vec![
        range_preservation(&ctx)?,
        monotonicity(&ctx)?,
        full_vs_reduced(&ctx)?,
        round_trip(&ctx)?,
        phi_middle_monotone(&ctx),
        tie_rule(&ctx)?,
        sign_changes(&ctx)?,
        fixed_point(&ctx, cfg),
        subcritical_convergence(&ctx)?,
        slopes(&ctx, slope_tol)?,
        curvature(&ctx)?,
        region_one(&ctx)?,
        sibling_contraction(&ctx)?,
        chain(&ctx)?,
    ];
    let all_passed = checks.iter().all(|c| c.status != Status::Fail);
    Ok(VerifyReport {
        a: p.a(),
        b: p.b(),
        branching: cfg.branching.clone(),
        regime: classify_regime(&p, &cfg.topo, EQ_TOL).kind,
        checks,
        all_passed,
    })
}
