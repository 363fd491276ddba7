//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test --test acceptance`.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use earthquake_core::earthquake::{EarthquakeField, EdgePolicy, Orientation, QuakeSide};
use earthquake_core::envelope::{EnvelopePair, Side, SupportPlanes};
use earthquake_core::field::{CircleField, TrigPoly};
use earthquake_core::lamination::{thurston_norm, MeasuredLamination};
use earthquake_core::mink::{
    killing_eval, lambda_matrix, CirclePoint, KleinPoint, LinearIsometry, Mat3, MinkVec,
};
use earthquake_core::norms::{
    cross_ratio_norm, fan_hu_check, phi_vs_width_check, verify_th2_on, width, NormParams, C_LEFT, C_RIGHT,
};
use earthquake_core::oracle::{envelope_oracle, finite_eq_oracle, FiniteEarthquakeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORPUS: u64 = 20;
const N: usize = 4096;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn corpus_field(seed: u64) -> CircleField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CircleField::TrigPoly(TrigPoly::random(&mut rng, 5))
}

fn random_mink<R: Rng>(rng: &mut R, scale: f64) -> MinkVec {
    MinkVec::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn random_isometry<R: Rng>(rng: &mut R, max_rapidity: f64) -> LinearIsometry {
    LinearIsometry::rotation(rng.gen_range(0.0..TAU))
        .compose(&LinearIsometry::boost(rng.gen_range(0.0..max_rapidity), 0.0))
        .compose(&LinearIsometry::rotation(rng.gen_range(0.0..TAU)))
}

fn random_disk_point<R: Rng>(rng: &mut R, max_r: f64) -> KleinPoint {
    KleinPoint::from_polar(max_r * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU)).unwrap()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_orth = 0.0f64;
    let mut worst_support = 0.0f64;
    for _ in 0..10_000 {
        let (x, y) = (random_mink(&mut rng, 2.0), random_mink(&mut rng, 2.0));
        let w = x.cross(y);
        worst_orth = worst_orth.max(w.inner(x).abs()).max(w.inner(y).abs());
        // <(1,z), sigma> = <(1,z) ⊠ sigma, (0, iz)> on the circle
        let z = CirclePoint::new(rng.gen_range(0.0..TAU));
        let (c, s) = z.coords();
        let lift = MinkVec::lift_circle(z);
        worst_support = worst_support.max((lift.inner(x) - lift.cross(x).inner(MinkVec::new(0.0, -s, c))).abs());
    }
    let mut worst_ad = 0.0f64;
    for _ in 0..1000 {
        let a = random_isometry(&mut rng, 2.0);
        let sigma = random_mink(&mut rng, 2.0);
        let p = random_disk_point(&mut rng, 0.95);
        let lhs = killing_eval(a.apply(sigma), a.klein_action(p));
        let rhs = a.pushforward(p, killing_eval(sigma, p));
        worst_ad = worst_ad.max(dist(lhs, rhs));
        let conj = mat_mul(&mat_mul(a.matrix(), &lambda_matrix(sigma)), a.inverse().matrix());
        let direct = lambda_matrix(a.apply(sigma));
        for i in 0..3 {
            for j in 0..3 {
                worst_ad = worst_ad.max((conj[i][j] - direct[i][j]).abs());
            }
        }
    }
    let pass = worst_orth <= 1e-12 && worst_support <= 1e-12 && worst_ad <= 1e-9;
    outcome(pass, format!("orthogonality {worst_orth:.1e}, support identity {worst_support:.1e}, Ad-equivariance {worst_ad:.1e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let sigma = random_mink(&mut rng, 2.0);
        let e = EnvelopePair::build(&CircleField::Killing(sigma), 256, &[]).unwrap();
        for side in [QuakeSide::Left, QuakeSide::Right] {
            let q = EarthquakeField::new(&e, side, EdgePolicy::Medial);
            for i in 0..1000 {
                let p = KleinPoint::from_polar(0.99 * (i % 40) as f64 / 40.0, TAU * (i / 40) as f64 / 25.0).unwrap();
                worst = worst.max(dist(q.eval(p).unwrap(), killing_eval(sigma, p)));
            }
        }
    }
    outcome(worst <= 1e-9, format!("max deviation {worst:.1e} over 20 fields x 2 sides x 1000 points"))
}

fn criterion_3() -> Outcome {
    const NODES: usize = 48;
    let mut worst_eq = 0.0f64;
    let mut worst_env = 0.0f64;
    let mut points = 0;
    for seed in 0..50u64 {
        let side = if seed % 2 == 0 { QuakeSide::Left } else { QuakeSide::Right };
        let spec = FiniteEarthquakeSpec::random(seed, side, 0.05);
        let f = spec.to_field();
        let e = EnvelopePair::build(&f, 256, &[]).unwrap();
        let q = EarthquakeField::new(&e, side, EdgePolicy::Medial);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut taken = 0;
        while taken < 20 {
            let p = random_disk_point(&mut rng, 0.98);
            let Ok(expected) = finite_eq_oracle(&spec, p) else { continue };
            // stay clear of the leaves: nearby points must see the same stratum
            let stable = [(1e-7, 0.0), (-1e-7, 0.0), (0.0, 1e-7), (0.0, -1e-7)].iter().all(|&(dx, dy)| {
                let near = KleinPoint { e1: p.e1 + dx, e2: p.e2 + dy };
                finite_eq_oracle(&spec, near).is_ok_and(|v| dist(v, expected) < 1e-4)
            });
            if !stable {
                continue;
            }
            worst_eq = worst_eq.max(dist(q.eval(p).unwrap(), expected));
            taken += 1;
            points += 1;
        }
        // envelope against triple enumeration, breakpoints on the sample grid
        let g = FiniteEarthquakeSpec::random_on_grid(seed, QuakeSide::Left, NODES).to_field();
        let eg = EnvelopePair::build(&g, NODES, &[]).unwrap();
        for _ in 0..10 {
            let p = random_disk_point(&mut rng, 0.98);
            worst_env = worst_env.max((eg.eval_lower(p).unwrap() - envelope_oracle(&g, p, NODES)).abs());
        }
    }
    let pass = worst_eq <= 1e-6 && worst_env <= 1e-9;
    outcome(pass, format!("earthquake vs argmax oracle {worst_eq:.1e} at {points} points; envelope vs enumeration {worst_env:.1e}"))
}

fn criterion_4(envelopes: &[EnvelopePair]) -> Outcome {
    let mut edges = 0;
    let mut failures = 0;
    let mut worst_axis = 0.0f64;
    for e in envelopes {
        for (side, expected) in [(QuakeSide::Left, Orientation::Left), (QuakeSide::Right, Orientation::Right)] {
            let q = EarthquakeField::new(e, side, EdgePolicy::Medial);
            for (k, edge) in e.bending_edges(side.envelope_side()).iter().enumerate() {
                edges += 1;
                let c = match q.edge_comparison(k) {
                    Ok(c) => c,
                    Err(_) => {
                        failures += 1;
                        continue;
                    }
                };
                let Some((a, b)) = c.axis else {
                    failures += 1;
                    continue;
                };
                if c.orientation != expected {
                    failures += 1;
                }
                let (p, r) = (edge.a.to_array(), edge.b.to_array());
                let (a, b) = (a.to_array(), b.to_array());
                let err = dist(a, p).max(dist(b, r)).min(dist(a, r).max(dist(b, p)));
                worst_axis = worst_axis.max(err);
            }
        }
    }
    let pass = failures == 0 && worst_axis <= 1e-8;
    outcome(pass, format!("{edges} edges, {failures} exceptions, worst axis-chord distance {worst_axis:.1e}"))
}

fn criterion_5(fields: &[CircleField], envelopes: &[EnvelopePair]) -> Outcome {
    let mut monotone = true;
    let mut worst_k3 = 0.0f64;
    for (f, e) in fields.iter().zip(envelopes) {
        for side in [QuakeSide::Left, QuakeSide::Right] {
            let q = EarthquakeField::new(e, side, EdgePolicy::Medial);
            let sups: Vec<f64> = (1..=3)
                .map(|k| {
                    let r = 1.0 - 10f64.powi(-k);
                    (0..64)
                        .map(|j| {
                            let theta = TAU * j as f64 / 64.0;
                            let z = CirclePoint::new(theta);
                            let v = q.boundary_trace(z, &[r]).unwrap()[0];
                            dist(v, f.field_at(theta).unwrap())
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            monotone &= sups[0] > sups[1] && sups[1] > sups[2];
            worst_k3 = worst_k3.max(sups[2]);
        }
    }
    let dip = EnvelopePair::build(&CircleField::dip_atom(N), N, &[]).unwrap();
    let radial = dip.eval_lower(KleinPoint::new(0.999, 0.0).unwrap()).unwrap();
    let radial_err = (radial - (-1.0)).abs();
    let pass = monotone && worst_k3 <= 5e-2 && radial_err <= 2e-3;
    outcome(
        pass,
        format!("decreasing in k: {monotone}, worst sup at k=3 {worst_k3:.2e}, dip-atom radial error {radial_err:.1e}"),
    )
}

/// Everything criteria 6, 9 and 10 need for one corpus field.
struct NormRun {
    left_ok: bool,
    right_ok: bool,
    fan_hu_ok: bool,
    phi_width_ok: bool,
    refinement: [f64; 3],
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn norm_run(f: &CircleField, e: &EnvelopePair, params: &NormParams) -> NormRun {
    let w = width(e, params.grid_n, params.refine_iters);
    let report = verify_th2_on(f, e, &w, params).unwrap();
    let fh = fan_hu_check(f, params).unwrap();
    let pw = phi_vs_width_check(f, e, &w, params).unwrap();

    let e2 = EnvelopePair::build(f, 2 * params.n, &[]).unwrap();
    let th2 =
        thurston_norm(&MeasuredLamination::from_envelope(&e2, Side::Lower), params.th_samples, params.refine_iters, params.seed).value;
    let w2 = width(e, 2 * params.grid_n, params.refine_iters).value;
    let cr2 = cross_ratio_norm(f, 2 * params.cr_samples, params.refine_iters, params.seed).unwrap().value;
    NormRun {
        left_ok: report.th2_left_ok,
        right_ok: report.th2_right_ok,
        fan_hu_ok: fh.ok,
        phi_width_ok: pw.ok,
        refinement: [rel(report.thurston_lower_est, th2), rel(report.width_est, w2), rel(report.cr_est, cr2)],
    }
}

fn criterion_6(runs: &[NormRun], params: &NormParams) -> Outcome {
    let corpus_ok = runs.iter().all(|r| r.left_ok && r.right_ok);
    let f = CircleField::simple_earthquake(1.0);
    let e = EnvelopePair::build(&f, params.n, &[]).unwrap();
    let w = width(&e, params.grid_n, params.refine_iters);
    let r = verify_th2_on(&f, &e, &w, params).unwrap();
    let simple_ok = (r.thurston_lower_est - 1.0).abs() <= 1e-6 && r.width_est >= 0.5 - 1e-3 && r.left_margin >= 0.4 && r.all_ok();
    let constants_ok = (C_LEFT - (1.0 - 1f64.tanh()) / (2.0 * 2f64.sqrt())).abs() < 1e-16 && C_RIGHT == 8.0 / 3.0;
    let failing = runs.iter().filter(|r| !(r.left_ok && r.right_ok)).count();
    outcome(
        corpus_ok && simple_ok && constants_ok,
        format!(
            "c_left {C_LEFT:.7}, c_right {C_RIGHT:.7}; corpus failures {failing}/{}; simple earthquake: thurston {:.9}, width {:.6}, left margin {:.4}",
            runs.len(),
            r.thurston_lower_est,
            r.width_est,
            r.left_margin
        ),
    )
}

fn criterion_7(fields: &[CircleField], envelopes: &[EnvelopePair]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    for (f, e) in fields.iter().zip(envelopes).take(5) {
        let base = width(e, 256, 5).value;
        for _ in 0..10 {
            let a = random_isometry(&mut rng, 1.0);
            let v = random_mink(&mut rng, 1.0);
            let g = f.act_with_nodes(&a, v, N);
            let eg = EnvelopePair::build(&g, N, &[]).unwrap();
            worst = worst.max((width(&eg, 256, 5).value - base).abs() / base);
        }
    }
    outcome(worst <= 2e-3, format!("worst relative width change {worst:.1e} over 5 fields x 10 isometries"))
}

fn criterion_8(envelopes: &[EnvelopePair]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut interior = 0;
    let mut disagreements = 0;
    let mut worst_affine = 0.0f64;
    let mut chord_points = 0;
    for e in envelopes.iter().take(4) {
        for side in [QuakeSide::Left, QuakeSide::Right] {
            let es = side.envelope_side();
            let q = EarthquakeField::new(e, side, EdgePolicy::Medial);
            // 125 facet points per field and side, 1000 in total
            let mut taken = 0;
            while taken < 125 {
                let p = random_disk_point(&mut rng, 0.99);
                if !matches!(e.support_planes_at(p, es).unwrap(), SupportPlanes::Unique(_)) {
                    continue;
                }
                let v0 = q.eval(p).unwrap();
                for policy in EdgePolicy::ALL.into_iter().chain([EdgePolicy::Blend(0.7)]) {
                    if q.with_policy(policy).eval(p).unwrap() != v0 {
                        disagreements += 1;
                    }
                }
                taken += 1;
            }
            interior += taken;
            for (k, edge) in e.bending_edges(es).iter().enumerate().step_by(37) {
                let (u, w) = (e.samples()[edge.ends[0]].point, e.samples()[edge.ends[1]].point);
                let t: f64 = rng.gen_range(0.2..0.8);
                let p = KleinPoint { e1: u[0] + t * (w[0] - u[0]), e2: u[1] + t * (w[1] - u[1]) };
                if !matches!(e.support_planes_at(p, es).unwrap(), SupportPlanes::Edge { edge, .. } if edge == k) {
                    continue;
                }
                chord_points += 1;
                let at = |s: f64| q.with_policy(EdgePolicy::Blend(s)).eval(p).unwrap();
                let (v0, v1) = (at(0.0), at(1.0));
                for s in [0.1, 0.25, 0.5, 0.9] {
                    let lin = [(1.0 - s) * v0[0] + s * v1[0], (1.0 - s) * v0[1] + s * v1[1]];
                    worst_affine = worst_affine.max(dist(at(s), lin));
                }
            }
        }
    }
    let pass = interior >= 1000 && disagreements == 0 && chord_points > 0 && worst_affine <= 1e-10;
    outcome(
        pass,
        format!(
            "{interior} facet points, {disagreements} policy disagreements; {chord_points} chord points, worst affine defect {worst_affine:.1e}"
        ),
    )
}

fn criterion_9(runs: &[NormRun], params: &NormParams) -> Outcome {
    let fan_hu = runs.iter().filter(|r| r.fan_hu_ok).count();
    let phi_w = runs.iter().filter(|r| r.phi_width_ok).count();
    let f = CircleField::simple_earthquake(1.0);
    let e = EnvelopePair::build(&f, params.n, &[]).unwrap();
    let w = width(&e, params.grid_n, params.refine_iters);
    let pw = phi_vs_width_check(&f, &e, &w, params).unwrap();
    let fh = fan_hu_check(&f, params).unwrap();
    let max_phi = pw.max_phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tight = (max_phi - 2.0 * w.value).abs() <= 0.1 * 2.0 * w.value;
    let pass = fan_hu == runs.len() && phi_w == runs.len() && pw.ok && fh.ok && tight;
    outcome(
        pass,
        format!(
            "Fan-Hu {fan_hu}/{n}, phi vs width {phi_w}/{n}; simple earthquake: max phi {max_phi:.6} vs 2w {:.6}, Fan-Hu {:.4} <= {:.4}",
            2.0 * w.value,
            fh.max_abs_phi,
            fh.bound,
            n = runs.len()
        ),
    )
}

fn criterion_10(runs: &[NormRun]) -> Outcome {
    let mut worst = [0.0f64; 3];
    for r in runs {
        for (w, x) in worst.iter_mut().zip(r.refinement) {
            *w = w.max(x);
        }
    }
    let pass = worst.iter().all(|&x| x <= 0.02);
    outcome(
        pass,
        format!("worst relative change: thurston (N) {:.1e}, width (grid) {:.1e}, cross-ratio (samples) {:.1e}", worst[0], worst[1], worst[2]),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let params = NormParams::default();
    let fields: Vec<CircleField> = (0..CORPUS).map(corpus_field).collect();
    let envelopes: Vec<EnvelopePair> = fields.iter().map(|f| EnvelopePair::build(f, N, &[]).unwrap()).collect();

    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |id: usize, name: &'static str, run: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = run();
        println!("[{}] {id:>2} {name}: {} ({:.1}s)", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
        results.push((id, name, o));
    };
    record(1, "Minkowski kernel", &mut criterion_1);
    record(2, "Killing fixed point", &mut criterion_2);
    record(3, "oracle equivalence", &mut criterion_3);
    record(4, "left/right orientation", &mut || criterion_4(&envelopes));
    record(5, "boundary extension", &mut || criterion_5(&fields, &envelopes));
    let runs: Vec<NormRun> = fields.iter().zip(&envelopes).map(|(f, e)| norm_run(f, e, &params)).collect();
    record(6, "width, cross-ratio and Thurston inequalities", &mut || criterion_6(&runs, &params));
    record(7, "width invariance", &mut || criterion_7(&fields, &envelopes));
    record(8, "policy independence", &mut || criterion_8(&envelopes));
    record(9, "sup-norm bounds", &mut || criterion_9(&runs, &params));
    record(10, "estimator refinement", &mut || criterion_10(&runs));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} passed in {:.1}s", results.len() - failed.len(), results.len(), start.elapsed().as_secs_f64());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
