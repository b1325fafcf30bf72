//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! with a nonzero status when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{admissibility_oracle, conforming_slab, direct_estimate, raw_draw, rel};
use rbmortar_core::discretize::{assemble_monolithic, direct_eigenpairs, AffineSystem};
use rbmortar_core::eigen::{saddle_point_evp, saddle_residual};
use rbmortar_core::geometry::build_slab2;
use rbmortar_core::material::{check_admissibility, stiffness_from_engineering, ParamId};
use rbmortar_core::reduced::{greedy_enrich, indicators, pod_init, solve_reduced, Aggregation, ReducedModel};
use rbmortar_core::workbench::store::{self, ReducedMetadata};
use rbmortar_core::workbench::{cmd_offline, cmd_validate, nested_sizes, GeometrySource, StudyConfig, ValidationReport};
use rbmortar_core::{build_test_geometry, CsrMatrix, DetailedModel, ParameterBox, ParameterSample, TestGeometry};

const K: usize = 5;
const N_MAX: usize = 60;
const TRAINING: usize = 200;
const VALIDATION: usize = 100;
const STUDY_SEED: u64 = 2024;
const VALIDATION_SEED: u64 = 7;

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

fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max)
}

fn rel_max(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    CsrMatrix::linear_combination(&[(1.0, a), (-1.0, b)]).unwrap().max_abs() / b.max_abs()
}

/// Offline and validation run of the three-parameter bracket study shared
/// by the reduced-basis criteria.
struct Study {
    _dir: tempfile::TempDir,
    path: PathBuf,
    cfg: StudyConfig,
    detailed: DetailedModel,
    rm: ReducedModel,
    meta: ReducedMetadata,
    validation: ValidationReport,
    offline_seconds: f64,
    validation_seconds: f64,
}

fn study() -> &'static Study {
    static STUDY: OnceLock<Study> = OnceLock::new();
    STUDY.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bracket3");
        let mut cfg = StudyConfig::new(GeometrySource::Named("bracket3".into()), &path);
        cfg.varied = Some(vec![ParamId::EY, ParamId::GXy, ParamId::Thickness]);
        cfg.k = K;
        cfg.n_init = 25;
        cfg.n_max = N_MAX;
        cfg.training_size = TRAINING;
        cfg.validation_samples = VALIDATION;
        cfg.seed = STUDY_SEED;
        let t = Instant::now();
        cmd_offline(&cfg).unwrap();
        let offline_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let validation = cmd_validate(&path, VALIDATION, VALIDATION_SEED, None).unwrap();
        let validation_seconds = t.elapsed().as_secs_f64();
        let detailed = store::load_detailed(&path).unwrap();
        let (rm, meta) = store::load_reduced(&path, true).unwrap();
        Study {
            _dir: dir,
            path,
            cfg,
            detailed,
            rm,
            meta,
            validation,
            offline_seconds,
            validation_seconds,
        }
    })
}

fn affine_exactness() -> Outcome {
    let t = Instant::now();
    let model = build_test_geometry(TestGeometry::Bracket3).unwrap();
    let sys = AffineSystem::assemble(&model).unwrap();
    let bx = ParameterBox::p2().with_range(ParamId::Thickness, 0.5, 2.0);
    let samples = bx.sample_many(100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let (mut ea, mut em) = (0.0f64, 0.0f64);
    for mu in &samples {
        let (a, m) = assemble_monolithic(&model, mu).unwrap();
        ea = ea.max(rel_max(&sys.stiffness_at(mu).unwrap(), &a));
        em = em.max(rel_max(&sys.mass_at(mu).unwrap(), &m));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        ea <= 1e-12 && em <= 1e-12 && secs < 120.0,
        format!("100 P2 samples on bracket3: stiffness {ea:.2e}, mass {em:.2e} (<= 1e-12), {secs:.1} s (< 120 s)"),
    )
}

fn pullback_equivalence() -> Outcome {
    let mu = ParameterSample::reference();
    let c = stiffness_from_engineering(&mu).unwrap();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for g in [TestGeometry::Slab2, TestGeometry::Bracket3] {
        let model = build_test_geometry(g).unwrap();
        let detailed = DetailedModel::new(model.clone()).unwrap();
        for t in [0.5, 2.0] {
            let reference = detailed.solve(&mu.with_thickness(t), 10).unwrap();
            let scaled = direct_eigenpairs(&model.apply_thickness(t).unwrap(), &c, [mu.density; 3], 10).unwrap();
            let e = max_rel_err(&reference.values, &scaled.values);
            worst = worst.max(e);
            parts.push(format!("{g} t={t}: {e:.1e}"));
        }
    }
    outcome(worst <= 1e-9, format!("first 10 eigenvalues, {} (<= 1e-9)", parts.join(", ")))
}

fn density_triviality() -> Outcome {
    let detailed = DetailedModel::new(build_test_geometry(TestGeometry::Bracket3).unwrap()).unwrap();
    let mu = ParameterSample::reference().with_thickness(0.8);
    let a = detailed.solve(&mu, 10).unwrap();
    let b = detailed.solve(&mu.with_density(2.0 * mu.density), 10).unwrap();
    let scaled: Vec<f64> = a.values.iter().map(|l| l / 2.0).collect();
    let e_detailed = max_rel_err(&b.values, &scaled);

    let s = study();
    let mut e_reduced = 0.0f64;
    for mu in common::samples(&s.cfg.parameter_box().unwrap(), 20, 5) {
        let x = solve_reduced(&s.rm, &mu, K).unwrap();
        let y = solve_reduced(&s.rm, &mu.with_density(2.0 * mu.density), K).unwrap();
        let half: Vec<f64> = x.values.iter().map(|l| l / 2.0).collect();
        e_reduced = e_reduced.max(max_rel_err(&y.values, &half));
    }

    let training = s.cfg.training_set().unwrap();
    let heavy: Vec<ParameterSample> = training.iter().map(|m| m.with_density(2.0 * m.density)).collect();
    let argmax = |v: Vec<f64>| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    let mut same_argmax = true;
    for n in [25, 40, N_MAX] {
        let t = s.rm.truncated(n).unwrap();
        let i1 = argmax(indicators(&t, &training, K, Aggregation::Relative).unwrap());
        let i2 = argmax(indicators(&t, &heavy, K, Aggregation::Relative).unwrap());
        same_argmax &= i1 == i2;
    }

    let slab = DetailedModel::new(build_test_geometry(TestGeometry::Slab2).unwrap()).unwrap();
    let bx = common::three_parameter_box();
    let run = |rho: f64| {
        let training: Vec<ParameterSample> = common::samples(&bx, 40, 9).into_iter().map(|m| m.with_density(rho)).collect();
        let cfg = rbmortar_core::GreedyConfig {
            k: 3,
            training,
            n_init: 6,
            n_max: 24,
            tolerance: 0.0,
            aggregation: Aggregation::Relative,
            stability: 1.0,
            seed: 1,
            reference: ParameterSample::reference(),
        };
        let rm = greedy_enrich(&slab, pod_init(&slab, &cfg).unwrap(), &cfg).unwrap();
        rm.history.iter().map(|h| h.index).collect::<Vec<_>>()
    };
    let same_greedy = run(720.0) == run(1440.0);
    outcome(
        e_detailed <= 1e-12 && e_reduced <= 1e-12 && same_argmax && same_greedy,
        format!(
            "lambda(2 rho) vs lambda(rho)/2: detailed {e_detailed:.1e}, reduced {e_reduced:.1e} (<= 1e-12); \
             argmax invariant: {same_argmax}; greedy selections identical: {same_greedy}"
        ),
    )
}

fn admissibility_gate() -> Outcome {
    let bx = ParameterBox::p2().with_range(ParamId::Thickness, 0.5, 2.0);
    let gate = bx.with_margins(0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut disagree, mut excluded, mut admissible) = (0, 0, 0);
    for _ in 0..1000 {
        let mu = raw_draw(&bx, &mut rng);
        match admissibility_oracle(&mu) {
            None => excluded += 1,
            Some(expected) => {
                admissible += expected as usize;
                disagree += (check_admissibility(&mu, &gate) != expected) as usize;
            }
        }
    }
    outcome(
        disagree == 0,
        format!(
            "1000 raw P2 draws: {disagree} disagreements, {admissible} admissible, {excluded} in the {:.0e} band",
            common::ADMISSIBILITY_BAND
        ),
    )
}

fn mortar_correctness() -> Outcome {
    let mu = ParameterSample::reference();

    let mut model = build_test_geometry(TestGeometry::Slab2).unwrap();
    model.dirichlet.extend(model.free_faces());
    let sys = AffineSystem::assemble(&model).unwrap();
    let field = |x: [f64; 3]| {
        [
            0.1 + 0.3 * x[0] - 0.2 * x[1] + 0.05 * x[2],
            -0.4 * x[0] + 0.25 * x[1] + 0.7 * x[2],
            0.2 - 0.1 * x[0] + 0.6 * x[1] - 0.3 * x[2],
        ]
    };
    let pts = sys.dofs.greville_points(&model).unwrap();
    let exact = DVector::from_fn(sys.dofs.len(), |g, _| field(pts[g / 3])[g % 3]);
    let fixed = DVector::from_iterator(sys.dofs.fixed().len(), sys.dofs.fixed().iter().map(|&g| exact[g]));
    let patch = (sys.solve_dirichlet(&mu, &fixed).unwrap() - &exact).amax();

    let matching = DetailedModel::new(build_slab2([3, 2, 1], [3, 2, 1]).unwrap()).unwrap();
    let conforming = DetailedModel::new(conforming_slab()).unwrap();
    let matched = max_rel_err(&matching.solve(&mu, 10).unwrap().values, &conforming.solve(&mu, 10).unwrap().values);

    let detailed = DetailedModel::new(build_test_geometry(TestGeometry::Slab2).unwrap()).unwrap();
    let free = detailed.system.dofs.free();
    let a = detailed.system.stiffness_at(&mu).unwrap().submatrix(free, free).to_dense();
    let m = detailed.system.mass_at(&mu).unwrap().submatrix(free, free).to_dense();
    let b = detailed.system.free_coupling().to_dense();
    let sp = saddle_point_evp(&a, &b, &m, 10).unwrap();
    let saddle = max_rel_err(&sp.pairs.values, &detailed.solve(&mu, 10).unwrap().values);
    let resid = saddle_residual(&a, &b, &m, &sp);

    outcome(
        patch <= 1e-10 && matched <= 1e-10 && saddle <= 1e-9,
        format!(
            "patch test {patch:.1e} (<= 1e-10), matching vs conforming {matched:.1e} (<= 1e-10), \
             saddle vs constrained {saddle:.1e} (<= 1e-9, residual {resid:.1e})"
        ),
    )
}

fn rayleigh_ritz() -> Outcome {
    let s = study();
    let sizes = nested_sizes(&s.rm.history, K, s.rm.len());
    let models: Vec<ReducedModel> = sizes.iter().map(|&n| s.rm.truncated(n).unwrap()).collect();
    let (mut below, mut increases, mut worst) = (0, 0, f64::INFINITY);
    for mu in common::samples(&s.cfg.parameter_box().unwrap(), 50, 21) {
        let det = s.detailed.solve(&mu, K).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for t in &models {
            let red = solve_reduced(t, &mu, K).unwrap();
            for i in 0..K {
                let margin = red.values[i] / det.values[i] - 1.0;
                worst = worst.min(margin);
                below += (margin < -1e-9) as usize;
                if let Some(p) = &prev {
                    increases += (red.values[i] > p[i] * (1.0 + 1e-12)) as usize;
                }
            }
            prev = Some(red.values);
        }
    }
    outcome(
        below == 0 && increases == 0,
        format!(
            "50 samples x {} nested sizes: {below} violations of lambda_N >= lambda_h (1 - 1e-9) \
             (min lambda_N/lambda_h - 1 = {worst:.1e}), {increases} increases along the nested bases",
            sizes.len()
        ),
    )
}

fn estimator_identity() -> Outcome {
    let s = study();
    let mut worst = 0.0f64;
    for n in [20, 40, N_MAX] {
        let t = s.rm.truncated(n).unwrap();
        for mu in common::samples(&s.cfg.parameter_box().unwrap(), 20, 31) {
            let pairs = solve_reduced(&t, &mu, K).unwrap();
            let online = t.estimate(&mu, &pairs).unwrap();
            let direct = direct_estimate(&s.detailed, &t, &mu, &pairs);
            worst = worst.max(max_rel_err(&online, &direct));
        }
    }
    outcome(worst <= 1e-8, format!("20 samples at N = 20, 40, 60: max relative difference {worst:.1e} (<= 1e-8)"))
}

fn greedy_convergence() -> Outcome {
    let s = study();
    let v = &s.validation;
    let at = v.at(N_MAX);
    let rel: Vec<f64> = at.iter().map(|r| r.mean_rel).collect();
    let eig: Vec<f64> = at.iter().map(|r| r.mean_eigfun).collect();
    let sizes: Vec<usize> = nested_sizes(&s.rm.history, K, s.rm.len());
    let mut monotone = true;
    for i in 0..K {
        let series: Vec<f64> = sizes.iter().map(|&n| v.at(n)[i].mean_rel).collect();
        monotone &= series.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    }
    let minutes = (s.offline_seconds + s.validation_seconds) / 60.0;
    let fmt = |x: &[f64]| x.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(" ");
    let h = &s.meta.history;
    outcome(
        s.rm.len() == N_MAX
            && rel.iter().all(|&e| e < 1e-6)
            && eig.iter().all(|&e| e < 1e-3)
            && monotone
            && minutes < 30.0,
        format!(
            "N = {}: mean relative eigenvalue error [{}] (< 1e-6), eigenfunction error [{}] (< 1e-3), \
             decay monotone within 10%: {monotone}, max indicator {:.2e} -> {:.2e}, {:.1} min (< 30), csv {}",
            s.rm.len(),
            fmt(&rel),
            fmt(&eig),
            h.first().map_or(f64::NAN, |x| x.max_indicator),
            h.last().map_or(f64::NAN, |x| x.max_indicator),
            minutes,
            s.path.join(v.csv.file_name().unwrap()).display()
        ),
    )
}

fn thickness_monotonicity() -> Outcome {
    let detailed = DetailedModel::new(build_test_geometry(TestGeometry::Bracket3).unwrap()).unwrap();
    let l: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&t| detailed.solve(&ParameterSample::reference().with_thickness(t), 1).unwrap().values[0])
        .collect();
    outcome(l[0] < l[1] && l[1] < l[2], format!("lambda_1 at thickness 0.5, 1, 2: {:.6e} {:.6e} {:.6e}", l[0], l[1], l[2]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("affine exactness", affine_exactness),
        ("pullback equivalence", pullback_equivalence),
        ("density triviality", density_triviality),
        ("admissibility gate", admissibility_gate),
        ("mortar correctness", mortar_correctness),
        ("Rayleigh-Ritz bounds", rayleigh_ritz),
        ("estimator identity", estimator_identity),
        ("greedy convergence", greedy_convergence),
        ("thickness monotonicity", thickness_monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += (!o.pass) as usize;
        println!(
            "criterion {}: {} {name}: {} [{:.1} s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
