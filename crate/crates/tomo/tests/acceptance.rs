//! One PASS/FAIL line per acceptance criterion, with timings.
//!
//! Runs without the libtest harness; exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use werner_core::montecarlo::{coverage, estimate_marginals, AcquisitionModel, CoverageTally};
use werner_core::spin::Spin;
use werner_core::tomography::{exact_marginal_set, Reconstruction, Reconstructor, TomographySettings};
use werner_core::trap::simulate_trap_acquisition;
use werner_core::werner::{
    build_hybrid_mixture, build_mapped_qubit, build_werner_qubit, fidelity_threshold, kappa, metric_sweep, MetricRow,
    von_neumann_entropy, FidelityConvention,
};
use werner_core::wigner::{wigner_grid, GridSpec, NORMALIZATION_TOLERANCE};

const ALPHA: f64 = 0.7;
const CUTOFF: usize = 32;
const EVENTS: u64 = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn threshold() -> Outcome {
    let a = fidelity_threshold(FidelityConvention::default()).unwrap();
    let trace_norm = fidelity_threshold(FidelityConvention::TraceNorm).unwrap();
    check(
        (a - 0.2476).abs() <= 5e-4,
        format!("alpha* = {a:.6} (target 0.2476 +- 5e-4); trace-norm convention gives {trace_norm:.6}"),
    )
}

fn saturation() -> Outcome {
    let row = MetricRow::at(3.0, FidelityConvention::default()).unwrap();
    check(
        (row.negativity - 0.25).abs() <= 1e-3 && (row.fidelity - 0.75).abs() <= 1e-3,
        format!("E(3) = {:.6}, F(3) = {:.6} (targets 0.25, 0.75 +- 1e-3)", row.negativity, row.fidelity),
    )
}

fn anchors() -> Outcome {
    let s0 = von_neumann_entropy(&build_mapped_qubit(kappa(0.0)).unwrap()).unwrap();
    let s_mapped = von_neumann_entropy(&build_mapped_qubit(0.0).unwrap()).unwrap();
    let s_werner = von_neumann_entropy(&build_werner_qubit()).unwrap();
    let sweep = metric_sweep(0.0, 2.0, 201, FidelityConvention::default()).unwrap();
    let below_two = sweep.rows.iter().all(|r| r.entropy_bits < 2.0);
    check(
        (s0 - 0.811_278).abs() <= 1e-6
            && (s_mapped - 1.548_795).abs() <= 1e-6
            && (s_werner - 1.548_795).abs() <= 1e-6
            && sweep.entropy_nondecreasing
            && below_two,
        format!(
            "S(0) = {s0:.7}, S(kappa=0) = {s_mapped:.7}, S(Werner) = {s_werner:.7}; S nondecreasing: {}, below 2: {below_two}",
            sweep.entropy_nondecreasing
        ),
    )
}

fn noiseless_identity() -> Outcome {
    let rho = build_hybrid_mixture(ALPHA, CUTOFF).unwrap();
    let mut worst: f64 = 0.0;
    for eta in [1.0, 0.9] {
        let s = TomographySettings {
            eta,
            ..TomographySettings::REFERENCE
        };
        let rec = Reconstructor::new(s).unwrap().full(&exact_marginal_set(&rho, &s)).unwrap();
        worst = worst.max(rec.max_abs_error(&rho));
    }
    check(worst <= 1e-6, format!("max |error| over all blocks, eta in {{1, 0.9}}: {worst:.2e} (limit 1e-6)"))
}

/// Seeded reconstructions at the reference settings.
struct Ensemble {
    truth: werner_core::werner::HybridDensityOperator,
    model: AcquisitionModel,
    reconstructor: Reconstructor,
    runs: Vec<Reconstruction>,
}

impl Ensemble {
    fn new() -> Self {
        let truth = build_hybrid_mixture(ALPHA, CUTOFF).unwrap();
        let s = TomographySettings::REFERENCE;
        Ensemble {
            model: AcquisitionModel::from_density(&truth, &s).unwrap(),
            reconstructor: Reconstructor::new(s).unwrap(),
            truth,
            runs: Vec::new(),
        }
    }

    fn grow(&mut self, seeds: u64) {
        let s = TomographySettings::REFERENCE;
        for seed in self.runs.len() as u64..seeds {
            let data = estimate_marginals(&self.model.sample(EVENTS, seed), &s).unwrap();
            self.runs.push(self.reconstructor.full(&data).unwrap());
        }
    }
}

fn uu_diagonal_errors(rec: &Reconstruction, truth: &werner_core::werner::HybridDensityOperator) -> Vec<f64> {
    let (est, t) = (&rec.block(Spin::Up, Spin::Up).values, &truth.block_uu);
    (0..est.nrows()).map(|n| (est[(n, n)] - t[(n, n)]).norm()).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn faithful(e: &mut Ensemble) -> Outcome {
    e.grow(20);
    let runs = &e.runs[..20];
    let mut tally = CoverageTally::default();
    let mut worst_seed_cov: f64 = 1.0;
    let mut pooled = Vec::new();
    let mut worst_seed_median: f64 = 0.0;
    for rec in runs {
        let t = coverage(rec, &e.truth);
        worst_seed_cov = worst_seed_cov.min(t.fraction_3());
        tally.add(t);
        let errs = uu_diagonal_errors(rec, &e.truth);
        worst_seed_median = worst_seed_median.max(median(errs.clone()));
        pooled.extend(errs);
    }
    let med = median(pooled);
    check(
        tally.fraction_3() >= 0.9 && med < 0.01,
        format!(
            "within 3 sigma: {:.4} of {} components (worst seed {:.4}); median |error| uu diagonal: {med:.2e} (worst seed {worst_seed_median:.2e})",
            tally.fraction_3(),
            tally.total,
            worst_seed_cov
        ),
    )
}

fn calibration(e: &mut Ensemble) -> Outcome {
    e.grow(50);
    let mut tally = CoverageTally::default();
    for rec in &e.runs {
        tally.add(coverage(rec, &e.truth));
    }
    let f1 = tally.fraction_1();
    check(
        (f1 - 0.68).abs() <= 0.10,
        format!(
            "1 sigma coverage {f1:.4} over {} seeds, {} components (target 0.68 +- 0.10); 3 sigma {:.4}",
            e.runs.len(),
            tally.total,
            tally.fraction_3()
        ),
    )
}

fn wigner_structure() -> Outcome {
    let rho = build_hybrid_mixture(ALPHA, CUTOFF).unwrap();
    let grid = wigner_grid(&rho, GridSpec::covering(ALPHA));
    let maxima = grid.real_axis_maxima(0);
    let near = |x: f64| maxima.iter().find(|p| (p.re - x).abs() <= 0.15);
    let structure = match (maxima.len(), near(-ALPHA), near(ALPHA)) {
        (2, Some(l), Some(r)) => l.value > r.value,
        _ => false,
    };
    let norm = grid.normalization_ok(&rho);
    let found: Vec<String> = maxima.iter().map(|p| format!("{:+.1} ({:.4})", p.re, p.value)).collect();
    check(
        structure && norm,
        format!(
            "real-axis maxima of W_uu: [{}] (need two, near -0.7 and +0.7); W_uu(+0.7) = {:.4}; normalization within {NORMALIZATION_TOLERANCE:e}: {norm}",
            found.join(", "),
            grid.nearest(0, ALPHA, 0.0).re
        ),
    )
}

fn backend_equivalence() -> Outcome {
    let s = TomographySettings::REFERENCE;
    let rho = build_hybrid_mixture(ALPHA, CUTOFF).unwrap();
    let rec = Reconstructor::new(s).unwrap();
    let direct = rec
        .full(&estimate_marginals(&AcquisitionModel::from_density(&rho, &s).unwrap().sample(EVENTS, 101), &s).unwrap())
        .unwrap();
    let trap = rec
        .full(&estimate_marginals(&simulate_trap_acquisition(ALPHA, CUTOFF, &s, EVENTS, 202).unwrap(), &s).unwrap())
        .unwrap();
    let (mut within, mut total) = (0usize, 0usize);
    for (a, b, x) in direct.blocks() {
        let y = trap.block(a, b);
        for i in 0..x.dim() {
            for j in 0..x.dim() {
                let d = x.values[(i, j)] - y.values[(i, j)];
                for (diff, var) in [
                    (d.re, x.var_re[(i, j)] + y.var_re[(i, j)]),
                    (d.im, x.var_im[(i, j)] + y.var_im[(i, j)]),
                ] {
                    if var > 0.0 {
                        total += 1;
                        within += (diff.abs() <= 3.0 * var.sqrt()) as usize;
                    }
                }
            }
        }
    }
    let frac = within as f64 / total as f64;
    check(
        frac >= 0.99,
        format!("{within}/{total} element components within combined 3 sigma ({frac:.4}, gate 0.99)"),
    )
}

fn isometry() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.1, 0.35, 0.7, 1.2] {
        let big = build_hybrid_mixture(alpha, CUTOFF).unwrap().eigenvalues().unwrap();
        let small = build_mapped_qubit(kappa(alpha)).unwrap().eigenvalues().unwrap();
        for (i, l) in big.iter().enumerate() {
            let want = small.get(i).copied().unwrap_or(0.0);
            worst = worst.max((l - want).abs());
        }
    }
    check(worst <= 1e-8, format!("max spectral gap D=32 vs 4x4: {worst:.2e} (limit 1e-8)"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let mut o = f();
        let took = start.elapsed();
        if let Some(l) = limit {
            if took > l {
                o.pass = false;
                o.detail.push_str(&format!("; over the {:.0} s budget", l.as_secs_f64()));
            }
        }
        failures += (!o.pass) as usize;
        println!(
            "criterion {id} {} {name}: {} [{:.2} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    };
    let sec = Duration::from_secs;
    report(1, "threshold", Some(sec(1)), &mut threshold);
    report(2, "saturation", Some(sec(1)), &mut saturation);
    report(3, "anchor entropies", None, &mut anchors);
    report(4, "noiseless inversion", Some(sec(30)), &mut noiseless_identity);
    let mut e = Ensemble::new();
    report(5, "reference-scale reproduction", Some(sec(300)), &mut || faithful(&mut e));
    report(6, "error-bar calibration", None, &mut || calibration(&mut e));
    report(7, "Wigner structure", None, &mut wigner_structure);
    report(8, "backend equivalence", None, &mut backend_equivalence);
    report(9, "representation isometry", None, &mut isometry);
    println!("{} of 9 criteria pass", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
