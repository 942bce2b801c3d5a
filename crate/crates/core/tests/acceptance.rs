mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::time::{Duration, Instant};

use adiabatic_core::connection::{
    connection_at, convergence_envelope, first_order_prediction_error, gauge_transform, loglog_slope,
};
use adiabatic_core::curvature::{
    berry_curvature_at, berry_phase_surface_all, diagonality_residual, yang_mills_curvature, SurfacePatch,
};
use adiabatic_core::model::{spectral_at, ModelSpec, OscillatorModel, ParameterPoint, ParametricHamiltonian, Su2Model};
use adiabatic_core::nast::{maurer_cartan_flatness, nast_residual, NastConfig};
use adiabatic_core::reference::{
    block_distance, OscillatorReference, Su2Reference, A_Y_COEFFICIENT, A_Y_DISPLAYED_COEFFICIENT,
    CURVATURE_COEFFICIENT, CURVATURE_DISPLAYED_COEFFICIENT,
};
use adiabatic_core::transport::{evolve, holonomy, su2_triangle, wilson_loop_phases, Profile, Schedule};
use common::{Gauged, SmoothGauge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SU2_CONNECTION_TOL: f64 = 1e-10;
const SU2_CONNECTION_BUDGET: Duration = Duration::from_secs(1);
const TRIANGLE_REFINEMENT: usize = 2000;
const TRIANGLE_PHASE_TOL: f64 = 1e-6;
const TRIANGLE_OFFDIAG_TOL: f64 = 1e-6;
const TRIANGLE_BUDGET: Duration = Duration::from_secs(10);
const DIAGONALITY_TOL: f64 = 1e-5;
const SU2_BERRY_TOL: f64 = 1e-6;
const OSC_BERRY_TOL: f64 = 1e-4;
const NAST_TOL: f64 = 1e-3;
const NAST_MIN_RATIO: f64 = 3.0;
const NAST_BUDGET: Duration = Duration::from_secs(60);
const TRIANGULATION_TOL: f64 = 2e-4;
const FLATNESS_REFINEMENT: usize = 4000;
const FLATNESS_TOL: f64 = 1e-4;
const FLATNESS_TIME: f64 = 1.7;
const AVERAGED_PHASE_TOL: f64 = 1e-6;
const SLOPE_TARGET: f64 = -1.0;
const SLOPE_TOL: f64 = 0.3;
const GAUGE_TOL: f64 = 1e-6;
const CD_FIDELITY: f64 = 1.0 - 1e-6;
const BARE_FIDELITY_CEILING: f64 = 0.99;
const DRIVE_DT: f64 = 1e-4;
const SHIFT_MIN_ORDER: f64 = 1.9;
const A_Y_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

fn oscillator() -> OscillatorModel {
    OscillatorModel::new(OscillatorModel::DEFAULT_NMAX, OscillatorModel::DEFAULT_BUFFER).unwrap()
}

fn su2_golden_connection() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for two_l in 1..=3 {
        let model = Su2Model::new(two_l, 1.0).unwrap();
        let exact = Su2Reference::new(two_l).unwrap();
        for _ in 0..50 {
            let p = ParameterPoint::from([rng.gen_range(0.2..3.0), rng.gen_range(0.05..PI - 0.05), rng.gen_range(-PI..PI)]);
            let num = connection_at(&model, &p).unwrap();
            let reference = exact.connection(&p).unwrap();
            for (a, b) in num.components.iter().zip(&reference.components) {
                worst = worst.max((a.matrix() - b.matrix()).norm());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= SU2_CONNECTION_TOL && elapsed < SU2_CONNECTION_BUDGET,
        format!("max |A_num - A_exact|_F = {worst:.2e} (tol {SU2_CONNECTION_TOL:.0e}), {elapsed:.2?}"),
    )
}

fn triangle_berry_phase() -> Outcome {
    let start = Instant::now();
    let model = Su2Model::new(1, 1.0).unwrap();
    let reference = Su2Reference::new(1).unwrap();
    let (mut phase_err, mut offdiag): (f64, f64) = (0.0, 0.0);
    let mut by_m = Vec::new();
    for omega in [FRAC_PI_4, FRAC_PI_2, 1.0] {
        let h = holonomy(&model, &su2_triangle(1.0, omega, TRIANGLE_REFINEMENT).unwrap()).unwrap();
        let expected = reference.triangle_phases(omega).unwrap();
        for (got, want) in h.phases.iter().zip(&expected) {
            phase_err = phase_err.max(wrap(got - want).abs());
        }
        offdiag = offdiag.max(h.offdiag_residual);
        by_m.push(format!("omega={omega:.4}: (m=+1/2, m=-1/2) = ({:+.6}, {:+.6})", h.phases[1], h.phases[0]));
    }
    let elapsed = start.elapsed();
    outcome(
        phase_err <= TRIANGLE_PHASE_TOL && offdiag < TRIANGLE_OFFDIAG_TOL && elapsed < TRIANGLE_BUDGET,
        format!(
            "phase err {phase_err:.2e} (tol {TRIANGLE_PHASE_TOL:.0e}), offdiag {offdiag:.2e} (tol {TRIANGLE_OFFDIAG_TOL:.0e}), {elapsed:.2?}; {}",
            by_m.join("; ")
        ),
    )
}

fn curvature_diagonality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spin = Su2Model::new(3, 1.0).unwrap();
    let osc = oscillator();
    let mut diag_res: f64 = 0.0;
    for _ in 0..20 {
        let p = ParameterPoint::from([rng.gen_range(0.5..2.0), rng.gen_range(0.2..PI - 0.2), rng.gen_range(-PI..PI)]);
        let f = yang_mills_curvature(&spin, &p, None).unwrap();
        diag_res = diag_res.max(diagonality_residual(&f, &spectral_at(&spin, &p, f64::NAN).unwrap()));
        let (x, z) = (rng.gen_range(0.8..2.5), rng.gen_range(0.8..2.5));
        let y = rng.gen_range(-0.5..0.5) * (x * z as f64).sqrt();
        let q = ParameterPoint::from([x, y, z]);
        let f = yang_mills_curvature(&osc, &q, None).unwrap();
        diag_res = diag_res.max(diagonality_residual(&f, &spectral_at(&osc, &q, f64::NAN).unwrap()));
    }
    let mut su2_err: f64 = 0.0;
    let mut displayed_ratio = 0.0;
    for two_l in 1..=3 {
        let m = Su2Model::new(two_l, 1.0).unwrap();
        for theta in [0.3, 1.1, 2.4] {
            let w = berry_curvature_at(&m, &ParameterPoint::from([1.0, theta, 0.7])).unwrap();
            for n in 0..w.levels() {
                let mq = m.m_of_level(n);
                su2_err = su2_err.max((w.get(n, 1, 2) - Su2Reference::berry_curvature(mq, theta)).abs());
                if mq != 0.0 {
                    displayed_ratio = w.get(n, 1, 2) / (-0.5 * mq * theta.sin());
                }
            }
        }
    }
    let p = ParameterPoint::from([2.0, 0.5, 1.5]);
    let w = berry_curvature_at(&osc, &p).unwrap();
    let mut osc_err: f64 = 0.0;
    for n in 0..w.levels() {
        for (mu, nu) in [(1, 2), (0, 1), (2, 0)] {
            osc_err = osc_err.max((w.get(n, mu, nu) - OscillatorReference::berry_curvature(&p, n, mu, nu)).abs());
        }
    }
    outcome(
        diag_res <= DIAGONALITY_TOL && su2_err <= SU2_BERRY_TOL && osc_err <= OSC_BERRY_TOL,
        format!(
            "diagonality {diag_res:.2e} (tol {DIAGONALITY_TOL:.0e}); W^(m) vs -m sin(theta) {su2_err:.2e} (tol {SU2_BERRY_TOL:.0e}), \
             ratio to -(m/2) sin(theta) = {displayed_ratio:.6}; oscillator over {} levels {osc_err:.2e} (tol {OSC_BERRY_TOL:.0e}), \
             certified coefficient {CURVATURE_COEFFICIENT} vs displayed {CURVATURE_DISPLAYED_COEFFICIENT}",
            w.levels()
        ),
    )
}

fn nast_equality() -> Outcome {
    let start = Instant::now();
    let model = Su2Model::new(1, 1.0).unwrap();
    let cfg = NastConfig::default();
    let coarse = nast_residual(&model, &SurfacePatch::spherical_cap(1.0, FRAC_PI_2, 25, 25).unwrap(), &cfg).unwrap();
    let fine = nast_residual(&model, &SurfacePatch::spherical_cap(1.0, FRAC_PI_2, 50, 50).unwrap(), &cfg).unwrap();
    let ratio = coarse.residual / fine.residual;
    let elapsed = start.elapsed();
    outcome(
        fine.residual <= NAST_TOL && ratio >= NAST_MIN_RATIO && elapsed < NAST_BUDGET,
        format!(
            "50x50 residual {:.3e} (tol {NAST_TOL:.0e}), 25x25 {:.3e}, ratio {ratio:.2} (min {NAST_MIN_RATIO}), {elapsed:.2?}",
            fine.residual, coarse.residual
        ),
    )
}

fn oracle_triangulation() -> Outcome {
    let osc = oscillator();
    let spin_half = Su2Model::new(1, 1.0).unwrap();
    let spin_one = Su2Model::new(2, 1.0).unwrap();
    let spin_three_halves = Su2Model::new(3, 1.0).unwrap();
    let sector = |t: f64, o: f64| SurfacePatch::spherical_sector(1.0, t, o, 100, 100).unwrap();
    let rect = |p: [f64; 3], mu, nu| SurfacePatch::rectangle(ParameterPoint::from(p), mu, nu, 0.4, 0.3, 40, 40).unwrap();
    let cases: Vec<(&str, &dyn ParametricHamiltonian, SurfacePatch, usize, usize)> = vec![
        ("spin-1/2 sector(pi/2, 1.0)", &spin_half, sector(FRAC_PI_2, 1.0), 8, 2),
        ("spin-1/2 sector(1.2, 2.5)", &spin_half, sector(1.2, 2.5), 8, 2),
        ("spin-1 sector(pi/2, pi/4)", &spin_one, sector(FRAC_PI_2, FRAC_PI_4), 8, 3),
        ("spin-3/2 sector(0.8, 1.5)", &spin_three_halves, sector(0.8, 1.5), 8, 4),
        ("spin-1/2 sector(2.0, 0.6)", &spin_half, sector(2.0, 0.6), 8, 2),
        ("oscillator (Y,Z) at (2,0.2,1.5)", &osc, rect([2.0, 0.2, 1.5], 1, 2), 4, 6),
        ("oscillator (X,Y) at (1.5,-0.3,1.2)", &osc, rect([1.5, -0.3, 1.2], 0, 1), 4, 6),
        ("oscillator (X,Z) at (1.0,0.1,1.0)", &osc, rect([1.0, 0.1, 1.0], 0, 2), 4, 6),
        ("oscillator (Z,X) at (2.2,0.4,0.9)", &osc, rect([2.2, 0.4, 0.9], 2, 0), 4, 6),
        ("oscillator (Y,Z) at (0.8,0.0,2.0)", &osc, rect([0.8, 0.0, 2.0], 1, 2), 4, 6),
    ];
    let mut worst: f64 = 0.0;
    let mut worst_case = "";
    for (label, model, patch, refinement, levels) in &cases {
        let lp = patch.boundary(*refinement).unwrap();
        let h = holonomy(*model, &lp).unwrap();
        let w = wilson_loop_phases(*model, &lp).unwrap();
        let s = berry_phase_surface_all(*model, patch, 1e-3).unwrap();
        for n in 0..*levels {
            let d = wrap(h.phases[n] - w[n])
                .abs()
                .max(wrap(h.phases[n] - s.phases[n]).abs())
                .max(wrap(w[n] - s.phases[n]).abs());
            if d > worst {
                worst = d;
                worst_case = label;
            }
        }
    }
    outcome(
        worst <= TRIANGULATION_TOL,
        format!("10 loops, max pairwise disagreement {worst:.2e} (tol {TRIANGULATION_TOL:.0e}) on {worst_case}"),
    )
}

fn maurer_cartan_flat() -> Outcome {
    let model = Su2Model::new(1, 1.0).unwrap();
    let lp = su2_triangle(1.0, FRAC_PI_2, FLATNESS_REFINEMENT).unwrap();
    let flat = maurer_cartan_flatness(&model, &lp, FLATNESS_TIME).unwrap();
    let h = holonomy(&model, &lp).unwrap();
    let err = (h.phases[0] - FRAC_PI_4).abs().max((h.phases[1] + FRAC_PI_4).abs());
    outcome(
        flat <= FLATNESS_TOL && err <= AVERAGED_PHASE_TOL,
        format!(
            "omega-holonomy residual at t={FLATNESS_TIME} {flat:.2e} (tol {FLATNESS_TOL:.0e}); averaged-A phases ({:+.6}, {:+.6}) vs (+pi/4, -pi/4), err {err:.2e}",
            h.phases[0], h.phases[1]
        ),
    )
}

fn time_average_convergence() -> Outcome {
    let horizons: Vec<f64> = (0..5).map(|k| 25.0 * 2f64.powi(k)).collect();
    let spin = Su2Model::new(1, 1.0).unwrap();
    let random = ModelSpec::pseudo_random(3, 2, 4, 7).unwrap();
    let s1 = loglog_slope(&convergence_envelope(&spin, &ParameterPoint::from([1.0, 0.8, 0.2]), &horizons, 12).unwrap());
    let s2 = loglog_slope(
        &convergence_envelope(&random, &ParameterPoint::new(vec![0.3, -0.2]).unwrap(), &horizons, 12).unwrap(),
    );
    outcome(
        (s1 - SLOPE_TARGET).abs() <= SLOPE_TOL && (s2 - SLOPE_TARGET).abs() <= SLOPE_TOL,
        format!("envelope slope spin-1/2 {s1:.3}, random 3-level {s2:.3} (target {SLOPE_TARGET} +- {SLOPE_TOL})"),
    )
}

fn gauge_covariance() -> Outcome {
    let model = Su2Model::new(1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let gauge = SmoothGauge::random(&mut rng, 2, 3);
        let p = ParameterPoint::from([rng.gen_range(0.5..2.0), rng.gen_range(0.3..2.8), rng.gen_range(-3.0..3.0)]);
        let a = connection_at(&model, &p).unwrap();
        let transformed = gauge_transform(&a, &gauge.at(&p), &gauge.derivative(&p)).unwrap();
        let rotated = Gauged { inner: &model, gauge: &gauge };
        let spec = spectral_at(&rotated, &p, f64::NAN).unwrap();
        let direct = connection_at(&rotated, &p).unwrap();
        for (x, y) in transformed.off_diagonal(&spec).iter().zip(&direct.off_diagonal(&spec)) {
            worst = worst.max((x - y).norm());
        }
    }
    outcome(worst <= GAUGE_TOL, format!("10 random U(lambda), max off-diagonal mismatch {worst:.2e} (tol {GAUGE_TOL:.0e})"))
}

fn transitionless_driving() -> Outcome {
    let model = Su2Model::new(1, 1.0).unwrap();
    let sweep = |tau| {
        Schedule::new(ParameterPoint::from([1.0, 0.0, 0.0]), ParameterPoint::from([1.0, FRAC_PI_2, 0.0]), tau, Profile::Linear)
            .unwrap()
    };
    let cd = evolve(&model, &sweep(1.0), 0, DRIVE_DT, true).unwrap();
    let cd_fast = evolve(&model, &sweep(0.1), 0, DRIVE_DT, true).unwrap();
    let bare = evolve(&model, &sweep(0.1), 0, DRIVE_DT, false).unwrap();
    let cd_min = cd.min_fidelity.min(cd_fast.min_fidelity);
    outcome(
        cd_min >= CD_FIDELITY && bare.min_fidelity < BARE_FIDELITY_CEILING,
        format!(
            "CD min fidelity {cd_min:.10} (min {CD_FIDELITY}), bare tau=0.1 min fidelity {:.4} (ceiling {BARE_FIDELITY_CEILING})",
            bare.min_fidelity
        ),
    )
}

fn shift_operator_order() -> Outcome {
    let osc = oscillator();
    let random = ModelSpec::pseudo_random(3, 2, 4, 7).unwrap();
    let cases: Vec<(&str, &dyn ParametricHamiltonian, ParameterPoint, Vec<f64>)> = vec![
        ("oscillator", &osc, ParameterPoint::from([2.0, 0.5, 1.5]), vec![0.6, -0.3, 0.5]),
        ("random 3-level", &random, ParameterPoint::new(vec![0.3, -0.2]).unwrap(), vec![0.8, 0.6]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, model, p, v) in cases {
        let errs: Vec<f64> =
            [2e-2, 1e-2, 5e-3].iter().map(|&d| first_order_prediction_error(model, &p, &v, d).unwrap()).collect();
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        pass &= orders.iter().all(|&o| o >= SHIFT_MIN_ORDER);
        parts.push(format!("{label} orders {:.3}, {:.3}", orders[0], orders[1]));
    }
    outcome(pass, format!("{} (min {SHIFT_MIN_ORDER})", parts.join("; ")))
}

fn oscillator_a_y() -> Outcome {
    let osc = oscillator();
    let reference = OscillatorReference::new(&osc);
    let mut worst = [0.0f64; 3];
    for p in [[1.0, 0.0, 1.0], [2.0, 0.5, 1.5]] {
        let p = ParameterPoint::from(p);
        let spec = spectral_at(&osc, &p, f64::NAN).unwrap();
        let num = connection_at(&osc, &p).unwrap();
        let exact = reference.connection(&p).unwrap();
        for (k, (a, b)) in num.components.iter().zip(&exact.components).enumerate() {
            let d = block_distance(spec.frame.matrix(), a.matrix(), b.matrix(), spec.checked_levels);
            worst[k] = worst[k].max(d);
        }
    }
    outcome(
        worst[1] <= A_Y_TOL && worst[0] <= A_Y_TOL && worst[2] <= A_Y_TOL,
        format!(
            "A_Y {:.2e}, A_X {:.2e}, A_Z {:.2e} on trusted levels (tol {A_Y_TOL:.0e}); certified A_Y coefficient {A_Y_COEFFICIENT} \
             vs displayed {A_Y_DISPLAYED_COEFFICIENT} (ratio {})",
            worst[1],
            worst[0],
            worst[2],
            A_Y_COEFFICIENT / A_Y_DISPLAYED_COEFFICIENT
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("SU(2) golden connection", su2_golden_connection),
        ("triangle-loop Berry phase", triangle_berry_phase),
        ("curvature diagonality", curvature_diagonality),
        ("non-Abelian Stokes equality", nast_equality),
        ("oracle triangulation", oracle_triangulation),
        ("Maurer-Cartan flatness", maurer_cartan_flat),
        ("time-average convergence", time_average_convergence),
        ("gauge covariance", gauge_covariance),
        ("transitionless driving", transitionless_driving),
        ("shift operator second order", shift_operator_order),
        ("oscillator analytic A_Y", oscillator_a_y),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
