//! Acceptance criteria 1–8. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion does.

use std::process::Command as Proc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dilation_lab::dilation::{hat_checks, DilationTolerances, MinimalDilation};
use dilation_lab::families::{generate, Family, GenOptions};
use dilation_lab::instance::{Instance, InstanceFile};
use dilation_lab::kernel::{FactorBackend, KernelWindow};
use dilation_lab::linalg::{self, c, op_norm, CMat};
use dilation_lab::pipeline::{self, Command, Overrides, RunReport};
use dilation_lab::{CCRepresentation, LatticePoint, TruncatedFock};

const BIN: &str = env!("CARGO_BIN_EXE_dilation-lab");

fn instances_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn lp(v: &[usize]) -> LatticePoint {
    LatticePoint::new(v.to_vec())
}

fn representation(inst: &Instance) -> Arc<CCRepresentation> {
    let (report, v) = pipeline::validate_instance(inst, 1e-10);
    match v {
        Some(v) => v.representation,
        None => panic!("invalid instance: {:?}", report.failures().collect::<Vec<_>>()),
    }
}

fn gen(family: Family, seed: u64, k: usize, gen_dim: usize, h_dim: usize) -> Instance {
    generate(family, seed, GenOptions { k, gen_dim, h_dim }).expect("generation")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Criterion 1: hat-semigroup exactness on ≥ 20 generated instances.
fn criterion_1() -> Outcome {
    let mut cases = Vec::new();
    for seed in 0..4 {
        cases.push(gen(Family::ScalarCommuting, seed, 2, 1, 2 + seed as usize % 3));
        cases.push(gen(Family::DiagonalDoublyCommuting, seed, 2, 2, 1 + seed as usize % 2));
        cases.push(gen(Family::MultiplicationIsometric, seed, 2, 1, 2 + 2 * (seed as usize % 2)));
        cases.push(gen(Family::RandomContractive, seed, 2, 1, 2 + seed as usize % 3));
    }
    cases.push(gen(Family::NilpotentCounterexample, 0, 2, 1, 2));
    cases.push(gen(Family::ScalarCommuting, 9, 1, 1, 4));
    cases.push(gen(Family::DiagonalDoublyCommuting, 9, 2, 3, 1));
    cases.push(gen(Family::RandomContractive, 9, 1, 1, 3));
    let tol = DilationTolerances::default();
    let (mut semi, mut tech, mut norm, mut comm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for inst in &cases {
        let rep = representation(inst);
        let k = rep.k();
        let space = TruncatedFock::new(rep.clone(), LatticePoint::uniform(k, 3)).expect("block space");
        let r = hat_checks(&space, &tol, false).expect("hat checks");
        semi = semi.max(r.get("hat_semigroup").unwrap().residual);
        tech = tech.max(r.get("technology").unwrap().residual);
        let alg = rep.system().algebra().clone();
        for s in space.bound().box_points() {
            norm = norm.max(space.hat(&s).unwrap().norm());
            for p in 0..alg.dim() {
                comm = comm.max(space.a_commutator(&alg.basis_element(p), &s).unwrap());
            }
        }
    }
    let pass = cases.len() >= 20 && semi <= 1e-10 && tech <= 1e-10 && norm <= 1.0 + 1e-10 && comm <= 1e-10;
    outcome(
        pass,
        format!(
            "{} instances; semigroup {semi:.1e}, technology {tech:.1e}, max ‖T̂ₛ‖ {norm:.12}, commutator {comm:.1e}",
            cases.len()
        ),
    )
}

/// Explicit minimal isometric dilation of a single contraction on
/// `H ⊕ D ⊕ D ⊕ …` (truncated to `depth` defect copies):
/// `V(h, d₀, d₁, …) = (Th, D_T h, d₀, d₁, …)`.
fn schaffer_gram(t: &CMat, depth: usize) -> Vec<Vec<CMat>> {
    let d = t.nrows();
    let defect2 = linalg::identity(d) - t.adjoint() * t;
    let e = linalg::hermitian_eigen(&defect2);
    let mut sq = linalg::zeros(d, d);
    for (i, &l) in e.values.iter().enumerate() {
        let v = e.vectors.column(i);
        sq += &v * v.adjoint() * c(l.max(0.0).sqrt(), 0.0);
    }
    let n = d * (depth + 1);
    let mut v = linalg::zeros(n, n);
    v.view_mut((0, 0), (d, d)).copy_from(t);
    v.view_mut((d, 0), (d, d)).copy_from(&sq);
    for j in 1..depth {
        v.view_mut(((j + 1) * d, j * d), (d, d)).copy_from(&linalg::identity(d));
    }
    let mut embed = linalg::zeros(n, d);
    embed.view_mut((0, 0), (d, d)).copy_from(&linalg::identity(d));
    let mut powers = vec![embed];
    for i in 0..depth {
        powers.push(&v * &powers[i]);
    }
    (0..=depth)
        .map(|a| (0..=depth).map(|b| powers[a].adjoint() * &powers[b]).collect())
        .collect()
}

/// Criterion 2: single contractions against the Schäffer construction.
fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for case in 0..10 {
        let d = 1 + case % 4;
        let z = CMat::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let t = &z * c(rng.gen_range(0.3..1.0) / op_norm(&z), 0.0);
        let inst = Instance {
            algebra: dilation_lab::CStarAlgebra::scalars(),
            generators: vec![dilation_lab::Correspondence::standard(1)],
            flips: Default::default(),
            sigma: dilation_lab::AlgebraRepresentation::scalar(d),
            maps: vec![vec![t.clone()]],
        };
        let rep = representation(&inst);
        let space = Arc::new(TruncatedFock::new(rep, lp(&[4])).unwrap());
        let window = Arc::new(KernelWindow::new(space, lp(&[4])).unwrap());
        let dil = MinimalDilation::new(window, FactorBackend::Eigen, 1, DilationTolerances::default()).unwrap();
        let v1 = dil.build_vs(&lp(&[1]), &[c(1.0, 0.0)]).unwrap();
        let mut pows = vec![dil.iota().clone()];
        for i in 0..4 {
            pows.push(&v1 * &pows[i]);
        }
        let oracle = schaffer_gram(&t, 4);
        for n in 0..=4 {
            for m in 0..=4 {
                let ours = pows[n].adjoint() * &pows[m];
                worst = worst.max(linalg::max_abs(&(ours - &oracle[n][m])));
            }
        }
    }
    outcome(worst <= 1e-9, format!("10 contractions, max |⟨Vⁿh,Vᵐg⟩ − oracle| = {worst:.2e}"))
}

/// Criterion 3: the nilpotent pair.
fn criterion_3() -> Outcome {
    let inst = gen(Family::NilpotentCounterexample, 0, 2, 1, 2);
    let rep = representation(&inst);
    let ns = rep.brehmer_check_ns(&[0, 1], &lp(&[1, 1])).unwrap();
    let space = Arc::new(TruncatedFock::new(rep, lp(&[3, 3])).unwrap());
    let margin = KernelWindow::new(space, lp(&[3, 3])).unwrap().psd_margin();
    let status = Proc::new(BIN)
        .arg("dilate")
        .arg(instances_dir().join("nilpotent_pair.json"))
        .output()
        .expect("run binary")
        .status
        .code();
    let pass = (ns + 1.0).abs() <= 1e-12 && margin < -0.1 && status == Some(3);
    outcome(
        pass,
        format!("Brehmer min {ns:.15}, window margin {margin:.4}, dilate exit {status:?}"),
    )
}

fn suite4_cases() -> Vec<(String, Instance, Overrides)> {
    let mut out = Vec::new();
    let plain = Overrides::default();
    let small_l = Overrides {
        l: Some(lp(&[2, 2])),
        ..Overrides::default()
    };
    for (seed, d) in [(0, 1), (1, 2), (2, 3), (3, 2)] {
        out.push((
            format!("scalar seed {seed} d {d}"),
            gen(Family::ScalarDoublyCommuting, seed, 2, 1, d),
            plain.clone(),
        ));
    }
    for seed in 0..3 {
        out.push((
            format!("diagonal seed {seed}"),
            gen(Family::DiagonalDoublyCommuting, seed, 2, 2, 1),
            small_l.clone(),
        ));
    }
    for (seed, d) in [(0, 2), (1, 2), (2, 4)] {
        out.push((
            format!("multiplication seed {seed} d {d}"),
            gen(Family::MultiplicationIsometric, seed, 2, 1, d),
            plain.clone(),
        ));
    }
    out
}

/// Criteria 4 and 6 share the dilation runs.
fn criteria_4_and_6() -> (Outcome, Outcome) {
    let mut ok4 = true;
    let mut ok6 = true;
    let mut worst = [0.0f64; 7];
    let mut uniq = 0.0f64;
    let mut failures = Vec::new();
    let cases = suite4_cases();
    for (name, inst, over) in &cases {
        let file = InstanceFile::from_instance(inst);
        let (report, code) = pipeline::run(Command::Dilate, &file, over);
        let get = |n: &str| report.check(n).map_or(f64::INFINITY, |c| c.residual);
        let vals = [
            get("doubly_commuting_hat"),
            get("regular_item1"),
            get("regular_item2"),
            get("regular_item3"),
            get("regular_item4"),
            get("doubly_commuting_V"),
            report.hypotheses.as_ref().map_or(f64::INFINITY, |h| h.doubly_commuting_residual),
        ];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
        let this = code == 0
            && vals[0] <= 1e-10
            && vals[1..4].iter().all(|&v| v <= 1e-8)
            && vals[4] <= 1e-6
            && vals[5] <= 1e-6
            && report.parameters.m == lp(&[3, 3])
            && report.parameters.guard == 1;
        if !this {
            failures.push(format!("{name} (exit {code}): {:?}", report.diagnostics));
        }
        ok4 &= this;
        let u = get("uniqueness");
        uniq = uniq.max(u);
        ok6 &= u <= 1e-9;
    }
    ok4 &= cases.len() >= 10;
    let detail4 = format!(
        "{} instances; hat DC {:.1e}, items {:.1e}/{:.1e}/{:.1e}/{:.1e}, DC-V {:.1e}{}",
        cases.len(),
        worst[0],
        worst[1],
        worst[2],
        worst[3],
        worst[4],
        worst[5],
        if failures.is_empty() { String::new() } else { format!("; failures: {failures:?}") }
    );
    (
        outcome(ok4, detail4),
        outcome(ok6, format!("eigen vs pivoted Cholesky, max distance {uniq:.2e}")),
    )
}

/// Criterion 5: The Brehmer condition on box (2,2) gates positivity and the dilation.
fn criterion_5() -> Outcome {
    let mut cases = Vec::new();
    for seed in 0..10 {
        cases.push(gen(Family::RandomContractive, seed, 2, 1, 2));
    }
    for seed in 0..3 {
        cases.push(gen(Family::ScalarCommuting, seed, 2, 1, 2));
    }
    cases.push(gen(Family::DiagonalDoublyCommuting, 0, 2, 2, 1));
    cases.push(gen(Family::NilpotentCounterexample, 0, 2, 1, 2));
    let bound = lp(&[2, 2]);
    let tol = DilationTolerances::default();
    let (mut passing, mut failing, mut converse_holds) = (0, 0, 0);
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, inst) in cases.iter().enumerate() {
        let rep = representation(inst);
        let ns = rep
            .brehmer_min_over_box(&bound)
            .unwrap()
            .map_or(f64::INFINITY, |w| w.min_eigenvalue);
        let space = Arc::new(TruncatedFock::new(rep, bound.clone()).unwrap());
        let window = Arc::new(KernelWindow::new(space, bound.clone()).unwrap());
        let margin = window.psd_margin();
        if ns >= -1e-10 {
            passing += 1;
            let verified = margin >= -1e-8
                && MinimalDilation::new(window, FactorBackend::Eigen, 1, tol)
                    .and_then(|d| d.verify_regular_dilation())
                    .map(|r| r.passed())
                    .unwrap_or(false);
            if !verified {
                ok = false;
                notes.push(format!("case {i}: Brehmer holds but margin {margin:.2e} or verification failed"));
            }
        } else {
            failing += 1;
            if margin < 0.0 {
                converse_holds += 1;
            }
        }
    }
    let mut detail = format!(
        "{passing} satisfy Brehmer (all dilate and verify: {ok}); {failing} fail Brehmer, of which {converse_holds} have negative margin (reported only)"
    );
    if !notes.is_empty() {
        detail += &format!("; {notes:?}");
    }
    outcome(ok && passing > 0, detail)
}

/// Criterion 7: the isometric multiplication representation of M₂ on ℂ².
fn criterion_7() -> Outcome {
    let text = std::fs::read_to_string(instances_dir().join("multiplication_isometric.json")).unwrap();
    let inst = InstanceFile::from_json(&text).unwrap().decode().unwrap();
    let rep = representation(&inst);
    let k = rep.k();
    let space = Arc::new(TruncatedFock::new(rep.clone(), LatticePoint::uniform(k, 3)).unwrap());
    let window = Arc::new(KernelWindow::new(space, LatticePoint::uniform(k, 3)).unwrap());
    let dil = MinimalDilation::new(window, FactorBackend::Eigen, 1, DilationTolerances::default()).unwrap();
    let iota = dil.iota().clone();
    let mut worst = 0.0f64;
    for s in dil.generating_points().to_vec() {
        let dim = rep.system().fiber_dim(&s);
        for q in 0..dim {
            let mut x = vec![c(0.0, 0.0); dim];
            x[q] = c(1.0, 0.0);
            let v = dil.build_vs(&s, &x).unwrap();
            worst = worst.max(op_norm(&(iota.adjoint() * v * &iota - rep.apply_fiber(&s, &x))));
        }
    }
    let pass = worst <= 1e-10 && dil.k_dim() == rep.h_dim();
    outcome(
        pass,
        format!(
            "max ‖P_H Vₛ(x)|_H − Tₛ(x)‖ = {worst:.2e}; dilation space dim {} vs dim H {}",
            dil.k_dim(),
            rep.h_dim()
        ),
    )
}

/// Criterion 8: byte-identical reports from two runs of the binary.
fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.json"));
        let status = Proc::new(BIN)
            .arg("dilate")
            .arg(instances_dir().join("scalar_pair.json"))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        texts.push(std::fs::read_to_string(out).unwrap());
    }
    // timing is the last field of the report
    let strip = |t: &str| t.split("\"timing\"").next().unwrap().to_string();
    let parsed: Vec<RunReport> = texts.iter().map(|t| RunReport::from_json(t).unwrap()).collect();
    let same = strip(&texts[0]) == strip(&texts[1]) && parsed[0].without_timing() == parsed[1].without_timing();
    outcome(same, format!("{} bytes before timing, identical: {same}", strip(&texts[0]).len()))
}

fn report(n: usize, o: &Outcome, took: Duration, limit: Option<Duration>) -> bool {
    let in_time = limit.is_none_or(|l| took <= l);
    let pass = o.pass && in_time;
    let limit_text = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
    println!(
        "criterion {n}: {} [{:.1}s{limit_text}] {}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        o.detail
    );
    pass
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    let c1 = criterion_1();
    all &= report(1, &c1, t.elapsed(), Some(Duration::from_secs(60)));

    let t = Instant::now();
    let c2 = criterion_2();
    all &= report(2, &c2, t.elapsed(), Some(Duration::from_secs(30)));

    let t = Instant::now();
    let c3 = criterion_3();
    all &= report(3, &c3, t.elapsed(), None);

    let t = Instant::now();
    let (c4, c6) = criteria_4_and_6();
    let t46 = t.elapsed();
    all &= report(4, &c4, t46, Some(Duration::from_secs(300)));

    let t = Instant::now();
    let c5 = criterion_5();
    all &= report(5, &c5, t.elapsed(), None);

    all &= report(6, &c6, t46, None);

    let t = Instant::now();
    let c7 = criterion_7();
    all &= report(7, &c7, t.elapsed(), None);

    let t = Instant::now();
    let c8 = criterion_8();
    all &= report(8, &c8, t.elapsed(), None);

    if !all {
        eprintln!("at least one acceptance criterion failed");
        std::process::exit(1);
    }
}
