use werner_core::montecarlo::{estimate_marginals, propagate_errors, AcquisitionModel};
use werner_core::spin::Spin;
use werner_core::tomography::{exact_marginal_set, Reconstructor, TomographySettings};
use werner_core::werner::{build_hybrid_mixture, HybridDensityOperator};

fn setup() -> (HybridDensityOperator, TomographySettings, AcquisitionModel) {
    let rho = build_hybrid_mixture(0.7, 32).unwrap();
    let s = TomographySettings::REFERENCE;
    let model = AcquisitionModel::from_density(&rho, &s).unwrap();
    (rho, s, model)
}

/// Wilson-Hilferty quantile of χ²(k).
fn chi2_quantile(k: f64, z: f64) -> f64 {
    let h = 2.0 / (9.0 * k);
    k * (1.0 - h + z * h.sqrt()).powi(3)
}

#[test]
fn counts_follow_the_model_distribution() {
    let (_, _, model) = setup();
    let events = 10_000u64;
    for seed in [1u64, 2, 3] {
        let records = model.sample(events, seed);
        let (mut chi2, mut cells, mut groups) = (0.0, 0usize, 0usize);
        for rec in &records {
            let probs = &model.cells[[0.0, std::f64::consts::FRAC_PI_4]
                .iter()
                .position(|&t| (t - rec.theta).abs() < 1e-9)
                .map(|i| if i == 0 { 0 } else if rec.phi_spin < -1.0 { 1 } else { 2 })
                .unwrap()][rec.phase_index];
            let observed: Vec<u64> = rec.counts_up.iter().chain(&rec.counts_down).copied().chain([rec.overflow]).collect();
            let mut kept = 0;
            for (o, p) in observed.iter().zip(probs) {
                let e = p * events as f64;
                if e >= 5.0 {
                    chi2 += (*o as f64 - e).powi(2) / e;
                    kept += 1;
                }
            }
            cells += kept;
            groups += 1;
        }
        let dof = (cells - groups) as f64;
        let (lo, hi) = (chi2_quantile(dof, -2.5758), chi2_quantile(dof, 2.5758));
        assert!(lo <= chi2 && chi2 <= hi, "seed {seed}: chi2 {chi2:.1} outside [{lo:.1}, {hi:.1}] at {dof} dof");
    }
}

#[test]
fn frequency_estimator_is_unbiased() {
    let (_, s, model) = setup();
    let (events, seeds) = (10_000u64, 100u64);
    let rows = s.n_max + 1;
    let mut sum = vec![0.0; 3 * s.n_phases * 2 * rows];
    for seed in 0..seeds {
        let est = estimate_marginals(&model.sample(events, seed), &s).unwrap();
        for (g, table) in [&est.diagonal, &est.real_part, &est.imag_part].into_iter().enumerate() {
            for j in 0..s.n_phases {
                for n in 0..rows {
                    sum[((g * s.n_phases + j) * 2) * rows + n] += table.up[(n, j)];
                    sum[((g * s.n_phases + j) * 2 + 1) * rows + n] += table.down[(n, j)];
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for g in 0..3 {
        for j in 0..s.n_phases {
            for k in 0..2 * rows {
                let p = model.cells[g][j][k];
                let pooled = (events * seeds) as f64;
                if p * pooled < 25.0 {
                    continue;
                }
                let mean = sum[(g * s.n_phases + j) * 2 * rows + k] / seeds as f64;
                let se = (p * (1.0 - p) / pooled).sqrt();
                worst = worst.max((mean - p).abs() / se);
            }
        }
    }
    assert!(worst < 5.0, "largest deviation {worst:.2} pooled standard errors");
}

#[test]
fn doubling_events_shrinks_error_bars_by_sqrt_two() {
    let (rho, s, _) = setup();
    let rec = Reconstructor::new(s).unwrap();
    let exact = exact_marginal_set(&rho, &s);
    let (w, _) = exact.diagonal.outcome(Spin::Up);
    let (a_re, a_im) = propagate_errors(&rec, &(w / 1e4)).unwrap();
    let (b_re, b_im) = propagate_errors(&rec, &(w / 2e4)).unwrap();
    for (a, b) in a_re.iter().zip(b_re.iter()).chain(a_im.iter().zip(b_im.iter())) {
        if *a > 0.0 {
            assert!((a / b / 2f64.sqrt() - 1.0).abs() < 0.01);
        }
    }

    // the same with sampled data: the median ratio
    let model = AcquisitionModel::from_density(&rho, &s).unwrap();
    let sigma = |events| {
        let est = estimate_marginals(&model.sample(events, 11), &s).unwrap();
        let b = rec.diagonal_block(&est.diagonal, Spin::Up).unwrap();
        b.sigma_re()
    };
    let (a, b) = (sigma(10_000), sigma(20_000));
    let mut ratios: Vec<f64> = a.iter().zip(b.iter()).filter(|(x, _)| **x > 0.0).map(|(x, y)| x / y).collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    assert!((median / 2f64.sqrt() - 1.0).abs() < 0.01, "median ratio {median}");
}

#[test]
fn reconstruction_error_falls_with_statistics() {
    let (rho, s, model) = setup();
    let rec = Reconstructor::new(s).unwrap();
    let mut last = f64::INFINITY;
    for events in [1_000u64, 10_000, 100_000] {
        let est = rec.full(&estimate_marginals(&model.sample(events, 5), &s).unwrap()).unwrap();
        let mut errs = Vec::new();
        for (a, b, block) in est.blocks() {
            let t = rho.block(a, b);
            errs.extend(block.values.iter().zip(t.iter()).map(|(x, y)| (x - y).norm()));
        }
        errs.sort_by(f64::total_cmp);
        let median = errs[errs.len() / 2];
        eprintln!("events={events} median |error|={median:.3e}");
        assert!(median < last);
        last = median;
    }
}

#[test]
fn identical_seeds_reproduce_records() {
    let (_, _, model) = setup();
    assert_eq!(model.sample(1000, 42), model.sample(1000, 42));
    assert_ne!(model.sample(1000, 42), model.sample(1000, 43));
}
