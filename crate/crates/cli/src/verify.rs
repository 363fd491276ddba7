//! Invariant suites behind `earthquake-lab verify`.

use std::f64::consts::TAU;
use std::time::Instant;

use earthquake_core::earthquake::{EarthquakeField, EdgePolicy, Orientation, QuakeSide};
use earthquake_core::envelope::{EnvelopePair, Side};
use earthquake_core::field::{CircleField, Interp, Sampled, TrigPoly};
use earthquake_core::halfpipe::plane_value;
use earthquake_core::lamination::MeasuredLamination;
use earthquake_core::mink::{
    exp_killing, isometry_defect, killing_eval, set_killing_sign_fault, KleinPoint, LinearIsometry, MinkVec,
};
use earthquake_core::norms::{cross_ratio_norm, verify_th2_side, width};
use earthquake_core::oracle::{envelope_oracle, finite_eq_oracle, killing_polynomial, pushforward_fd, FiniteEarthquakeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::RunConfig;

struct SuiteOutcome {
    cases: usize,
    failures: usize,
    detail: String,
}

type Suite = fn(&Scale) -> SuiteOutcome;

/// Problem sizes of one verification run.
struct Scale {
    points: usize,
    specs: u64,
    trig_fields: u64,
    n: usize,
    norm_fields: u64,
    cfg: RunConfig,
}

impl Scale {
    fn new(cfg: &RunConfig) -> Self {
        let quick = cfg.quick;
        Scale {
            points: if quick { 200 } else { 2000 },
            specs: if quick { 6 } else { 40 },
            trig_fields: if quick { 2 } else { 6 },
            n: if quick { 512 } else { 2048 },
            norm_fields: if quick { 1 } else { 4 },
            cfg: cfg.clone(),
        }
    }
}

const SUITES: [(&str, Suite); 10] = [
    ("mink.killing_closed_form", mink_killing),
    ("mink.isometries", mink_isometries),
    ("field.equivariance", field_equivariance),
    ("envelope.enumeration", envelope_enumeration),
    ("earthquake.finite_oracle", earthquake_finite),
    ("earthquake.orientation", earthquake_orientation),
    ("lamination.structure", lamination_structure),
    ("norms.killing_vanish", norms_killing),
    ("norms.simple_earthquake", norms_simple),
    ("norms.comparison", norms_comparison),
];

/// Runs every suite, prints the table, and reports whether all passed.
pub fn run_all(cfg: &RunConfig, inject_fault: bool) -> bool {
    set_killing_sign_fault(inject_fault);
    let scale = Scale::new(cfg);
    println!("{:<26} {:>7} {:>9}  {:<6} detail", "suite", "cases", "failures", "status");
    let mut all = true;
    let start = Instant::now();
    for (name, suite) in SUITES {
        let t = Instant::now();
        let out = suite(&scale);
        let pass = out.failures == 0 && out.cases > 0;
        all &= pass;
        println!(
            "{:<26} {:>7} {:>9}  {:<6} {} ({:.1}s)",
            name,
            out.cases,
            out.failures,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            t.elapsed().as_secs_f64()
        );
    }
    set_killing_sign_fault(false);
    println!("verify: {} in {:.1}s", if all { "all suites passed" } else { "FAILED" }, start.elapsed().as_secs_f64());
    all
}

fn rng(tag: u64, cfg: &RunConfig) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream(tag);
    r
}

fn random_mink<R: Rng>(rng: &mut R, scale: f64) -> MinkVec {
    MinkVec::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn random_point<R: Rng>(rng: &mut R, max_r: f64) -> KleinPoint {
    KleinPoint::from_polar(max_r * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU)).expect("inside the disk")
}

fn random_isometry<R: Rng>(rng: &mut R, max_rapidity: f64) -> LinearIsometry {
    LinearIsometry::rotation(rng.gen_range(0.0..TAU))
        .compose(&LinearIsometry::boost(rng.gen_range(0.0..max_rapidity), 0.0))
        .compose(&LinearIsometry::rotation(rng.gen_range(0.0..TAU)))
}

fn trig_field(seed: u64) -> CircleField {
    CircleField::TrigPoly(TrigPoly::random(&mut ChaCha8Rng::seed_from_u64(seed), 5))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Counts cases whose error exceeds `tol` and reports the largest error.
struct Tally {
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Tally { cases: 0, failures: 0, worst: 0.0 }
    }

    fn check(&mut self, err: f64, tol: f64) {
        self.cases += 1;
        if err.is_nan() || err > tol {
            self.failures += 1;
        }
        if err.is_nan() {
            self.worst = f64::NAN;
        } else {
            self.worst = self.worst.max(err);
        }
    }

    fn fail(&mut self) {
        self.cases += 1;
        self.failures += 1;
    }

    fn done(self, what: &str) -> SuiteOutcome {
        SuiteOutcome { cases: self.cases, failures: self.failures, detail: format!("worst {what} {:.1e}", self.worst) }
    }
}

fn mink_killing(s: &Scale) -> SuiteOutcome {
    let mut r = rng(1, &s.cfg);
    let mut t = Tally::new();
    for _ in 0..s.points {
        let sigma = random_mink(&mut r, 2.0);
        let p = random_point(&mut r, 0.99);
        let err = dist(killing_eval(sigma, p), killing_polynomial(sigma, p));
        t.check(err, 1e-10 * (1.0 + sigma.euclid_norm()));
    }
    t.done("deviation from the closed form")
}

fn mink_isometries(s: &Scale) -> SuiteOutcome {
    let mut r = rng(2, &s.cfg);
    let mut t = Tally::new();
    for _ in 0..s.points / 4 {
        let a = exp_killing(random_mink(&mut r, 1.0), r.gen_range(-1.5..1.5));
        t.check(isometry_defect(a.matrix()), 1e-9);
        let p = random_point(&mut r, 0.9);
        let v = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let (exact, fd) = (a.pushforward(p, v), pushforward_fd(&a, p, v, 1e-6));
        match fd {
            Ok(fd) => t.check(dist(exact, fd) / (1.0 + exact[0].hypot(exact[1])), 1e-5),
            Err(_) => t.fail(),
        }
    }
    t.done("isometry defect / pushforward error")
}

fn field_equivariance(s: &Scale) -> SuiteOutcome {
    let mut r = rng(3, &s.cfg);
    let mut t = Tally::new();
    for i in 0..s.specs {
        let (a, v) = (random_isometry(&mut r, 1.5), random_mink(&mut r, 1.0));
        let sigma = random_mink(&mut r, 2.0);
        match CircleField::Killing(sigma).act(&a, v) {
            CircleField::Killing(img) => t.check((img - (a.apply(sigma) + v)).euclid_norm(), 1e-9),
            _ => t.fail(),
        }

        let f = FiniteEarthquakeSpec::random(s.cfg.seed ^ i, QuakeSide::Left, 0.05).to_field();
        let back = f.act(&a, v).act(&a.inverse(), -a.inverse().apply(v));
        for _ in 0..16 {
            let theta = r.gen_range(0.0..TAU);
            t.check((back.support_at(theta).unwrap() - f.support_at(theta).unwrap()).abs(), 1e-8);
        }

        let g = trig_field(s.cfg.seed.wrapping_add(i));
        let (h, _) = g.normalize3().unwrap();
        let (_, again) = h.normalize3().unwrap();
        t.check(again.euclid_norm(), 1e-12);
    }
    t.done("equivariance / normalization error")
}

fn envelope_enumeration(s: &Scale) -> SuiteOutcome {
    let mut r = rng(4, &s.cfg);
    let mut t = Tally::new();
    for _ in 0..s.trig_fields {
        let m = 20;
        let mut thetas: Vec<f64> = (0..m).map(|_| r.gen_range(0.0..TAU)).collect();
        thetas.sort_by(f64::total_cmp);
        let phis: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let f = CircleField::Sampled(Sampled::new(thetas.clone(), phis.clone(), Interp::Linear, Vec::new()).unwrap());
        let neg = CircleField::Sampled(
            Sampled::new(thetas, phis.iter().map(|p| -p).collect(), Interp::Linear, Vec::new()).unwrap(),
        );
        let e = EnvelopePair::build(&f, m, &[]).unwrap();
        for _ in 0..s.points / 20 {
            let p = random_point(&mut r, 0.99);
            t.check((e.eval_lower(p).unwrap() - envelope_oracle(&f, p, m)).abs(), 1e-9);
            t.check((e.eval_upper(p).unwrap() + envelope_oracle(&neg, p, m)).abs(), 1e-9);
        }
    }
    for i in 0..s.specs {
        let spec = FiniteEarthquakeSpec::random(s.cfg.seed.wrapping_add(100 + i), QuakeSide::Left, 0.05);
        let e = EnvelopePair::build(&spec.to_field(), s.n, &[]).unwrap();
        let strata = spec.strata();
        for _ in 0..8 {
            let p = random_point(&mut r, 0.99);
            let top = strata.iter().map(|&sg| plane_value(sg, p)).fold(f64::NEG_INFINITY, f64::max);
            t.check((e.eval_lower(p).unwrap() - top).abs(), 1e-9);
        }
    }
    t.done("envelope error")
}

fn finite_specs(s: &Scale, offset: u64) -> Vec<FiniteEarthquakeSpec> {
    (0..s.specs)
        .flat_map(|i| {
            let seed = s.cfg.seed.wrapping_add(offset + i);
            [FiniteEarthquakeSpec::random(seed, QuakeSide::Left, 0.05), FiniteEarthquakeSpec::random(seed, QuakeSide::Right, 0.05)]
        })
        .collect()
}

fn earthquake_finite(s: &Scale) -> SuiteOutcome {
    let mut r = rng(5, &s.cfg);
    let mut t = Tally::new();
    for spec in finite_specs(s, 200) {
        let e = EnvelopePair::build(&spec.to_field(), s.n, &[]).unwrap();
        let q = EarthquakeField::new(&e, spec.side, EdgePolicy::Medial);
        for _ in 0..16 {
            let p = random_point(&mut r, 0.99);
            let Ok(expected) = finite_eq_oracle(&spec, p) else { continue };
            match q.eval(p) {
                Ok(v) => t.check(dist(v, expected), 1e-8),
                Err(_) => t.fail(),
            }
        }
    }
    t.done("deviation from the argmax oracle")
}

/// Every comparison field across a bending chord must be a left earthquake
/// for the lower envelope and a right one for the upper envelope.
fn earthquake_orientation(s: &Scale) -> SuiteOutcome {
    let mut envelopes: Vec<EnvelopePair> =
        finite_specs(s, 300).iter().map(|spec| EnvelopePair::build(&spec.to_field(), s.n, &[]).unwrap()).collect();
    for i in 0..s.trig_fields {
        envelopes.push(EnvelopePair::build(&trig_field(s.cfg.seed.wrapping_add(400 + i)), s.n, &[]).unwrap());
    }
    let (mut edges, mut wrong, mut errors) = (0usize, 0usize, 0usize);
    for e in &envelopes {
        for (side, expected) in [(QuakeSide::Left, Orientation::Left), (QuakeSide::Right, Orientation::Right)] {
            let q = EarthquakeField::new(e, side, EdgePolicy::Medial);
            for k in 0..e.bending_edges(side.envelope_side()).len() {
                edges += 1;
                match q.edge_comparison(k) {
                    Ok(c) if c.orientation == expected => {}
                    Ok(_) => wrong += 1,
                    Err(_) => errors += 1,
                }
            }
        }
    }
    SuiteOutcome { cases: edges, failures: wrong + errors, detail: format!("{wrong} misoriented, {errors} unclassified") }
}

fn lamination_structure(s: &Scale) -> SuiteOutcome {
    let mut r = rng(7, &s.cfg);
    let mut t = Tally::new();
    for i in 0..s.trig_fields {
        let e = EnvelopePair::build(&trig_field(s.cfg.seed.wrapping_add(500 + i)), s.n, &[]).unwrap();
        for side in [Side::Lower, Side::Upper] {
            let lam = MeasuredLamination::from_envelope(&e, side);
            t.check(if lam.is_disjoint() && lam.weights_above_threshold() { 0.0 } else { 1.0 }, 0.0);
            let a = random_isometry(&mut r, 1.0);
            let moved = lam.transported(&a);
            for _ in 0..32 {
                let (p, q) = (random_point(&mut r, 0.9), random_point(&mut r, 0.9));
                let before = lam.transverse_measure(p, q);
                let after = moved.transverse_measure(a.klein_action(p), a.klein_action(q));
                t.check((before - after).abs(), 1e-9 * (1.0 + lam.total_mass()));
            }
        }
    }
    t.done("transport defect")
}

fn norms_killing(s: &Scale) -> SuiteOutcome {
    let mut r = rng(8, &s.cfg);
    let mut t = Tally::new();
    for _ in 0..s.norm_fields + 1 {
        let f = CircleField::Killing(random_mink(&mut r, 1.0));
        let e = EnvelopePair::build(&f, s.n, &[]).unwrap();
        t.check(width(&e, s.cfg.grid_n.min(64), s.cfg.refine_iters).value, 1e-8);
        t.check(cross_ratio_norm(&f, s.cfg.cr_samples.min(2000), s.cfg.refine_iters, s.cfg.seed).unwrap().value, 1e-8);
        t.check(MeasuredLamination::from_envelope(&e, Side::Lower).total_mass(), 0.0);
    }
    t.done("estimate")
}

fn norms_simple(s: &Scale) -> SuiteOutcome {
    let f = CircleField::simple_earthquake(1.0);
    let e = EnvelopePair::build(&f, s.n, &[]).unwrap();
    let lam = MeasuredLamination::from_envelope(&e, Side::Lower);
    let mut t = Tally::new();
    t.check((lam.leaves().len() as f64 - 1.0).abs(), 0.0);
    t.check((lam.total_mass() - 1.0).abs(), 1e-6);
    let mut params = s.cfg.norm_params();
    params.n = s.n;
    let w = width(&e, params.grid_n, params.refine_iters);
    let report = verify_th2_side(&f, &e, &w, Side::Lower, &params).unwrap();
    t.check(if report.all_ok() { 0.0 } else { 1.0 }, 0.0);
    let mut out = t.done("deviation");
    out.detail = format!("{}, left margin {:.3}", out.detail, report.left_margin);
    out
}

fn norms_comparison(s: &Scale) -> SuiteOutcome {
    let params = s.cfg.norm_params();
    let (mut cases, mut failures) = (0, 0);
    let mut min_ratio = f64::INFINITY;
    for i in 0..s.norm_fields {
        let f = trig_field(s.cfg.seed.wrapping_add(600 + i));
        let Ok(e) = EnvelopePair::build(&f, params.n, &[]) else {
            cases += 1;
            failures += 1;
            continue;
        };
        let w = width(&e, params.grid_n, params.refine_iters);
        for side in [Side::Lower, Side::Upper] {
            cases += 1;
            match verify_th2_side(&f, &e, &w, side, &params) {
                Ok(rep) if rep.all_ok() => {
                    min_ratio = min_ratio.min(rep.width_est / (rep.c_left * rep.thurston_lower_est).max(1e-300));
                }
                _ => failures += 1,
            }
        }
    }
    SuiteOutcome { cases, failures, detail: format!("min width / (c_left · thurston) {min_ratio:.2}") }
}
