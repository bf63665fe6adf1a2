//! Chains against exact enumeration and scalar predictions.

use ndarray::Array2;
use swlab_core::dynamics::exact::log_weights;
use swlab_core::dynamics::{
    batch_means, curie_weiss_rgd, exact_enumerate, glauber_run, overlap_concentration_probe,
    prgd_step, rgd_run, sk_gibbs_sample, ExactKernel, GlauberOptions, IsingModel,
};
use swlab_core::instances::{assemble, assemble_ones, sample_goe};
use swlab_core::rng::{rng_from_seed, trial_seed};
use swlab_core::scalar::{f_update, solve_q, GaussRule};
use swlab_core::{ModelParams, SpinConfiguration};

/// Stable root of `m = tanh(βm + h)` with the sign of `h` (positive root if h = 0).
fn mean_field_root(beta: f64, h: f64) -> f64 {
    let g = |m: f64| (beta * m + h).tanh() - m;
    let (mut lo, mut hi) = if h < 0.0 { (-1.0, -1e-12) } else { (1e-12, 1.0) };
    if g(lo) * g(hi) > 0.0 {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn free_spins_have_zero_mean_magnetization() {
    let j = Array2::<f64>::zeros((50, 50));
    let m = IsingModel::without_field(&j, 1.0).unwrap();
    let opts = GlauberOptions { record_every: Some(50), ..Default::default() };
    let run = glauber_run(&m, &SpinConfiguration::ones(50), 2_000_000, 1, &opts).unwrap();
    let series: Vec<f64> = run.trajectory.correlations()[100..].to_vec();
    let est = batch_means(&series, 50).unwrap();
    assert!(est.mean.abs() <= 3.0 * est.standard_error, "{est:?}");
}

#[test]
fn sk_ten_spin_glauber_matches_enumeration() {
    let n = 10;
    let (beta, h) = (0.3, 0.2);
    let w = sample_goe(n, 2024).unwrap();
    let exact_model = IsingModel::new(&w, 1.0, vec![h; n]).unwrap();
    let exact = exact_enumerate(&exact_model, beta).unwrap();
    let chain_model = IsingModel::new(&w, beta, vec![h; n]).unwrap();
    let opts = GlauberOptions { record_every: Some(n as u64), ..Default::default() };
    let run = glauber_run(&chain_model, &SpinConfiguration::ones(n), 10_000_000, 7, &opts).unwrap();
    let mags = run.trajectory.correlations();
    let energies: Vec<f64> = run.trajectory.entries.iter().map(|e| e.energy).collect();
    let m = batch_means(&mags, 100).unwrap();
    let e = batch_means(&energies, 100).unwrap();
    assert!((m.mean - exact.magnetization).abs() <= 3.0 * m.standard_error, "{m:?} vs {}", exact.magnetization);
    assert!((e.mean - exact.mean_energy).abs() <= 3.0 * e.standard_error, "{e:?} vs {}", exact.mean_energy);
    let kernel = ExactKernel::glauber(&exact_model, beta).unwrap();
    assert!(kernel.detailed_balance_residual() <= 1e-12);
}

#[test]
fn sk_gibbs_samples_match_enumeration_at_ten_spins() {
    let n = 10;
    let (beta, h) = (0.3, 0.5);
    let w = sample_goe(n, 99).unwrap();
    let exact = exact_enumerate(&IsingModel::new(&w, 1.0, vec![h; n]).unwrap(), beta).unwrap();
    let samples = 200;
    let mut rng = rng_from_seed(1);
    let mags: Vec<f64> = (0..samples)
        .map(|k| {
            let warm = SpinConfiguration::random(n, &mut rng);
            sk_gibbs_sample(&w, beta, h, 1_000_000, &warm, trial_seed(5, k)).unwrap().magnetization()
        })
        .collect();
    let mean = mags.iter().sum::<f64>() / samples as f64;
    let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let se = (var / samples as f64).sqrt();
    assert!((mean - exact.magnetization).abs() <= 3.0 * se, "{mean} vs {} (se {se})", exact.magnetization);
}

#[test]
fn sk_magnetization_matches_scalar_formula() {
    let n = 2000;
    let w = sample_goe(n, 17).unwrap();
    let (beta, h) = (0.8, 0.5);
    let q1 = solve_q(beta, h, &ModelParams::default()).unwrap().q1;
    let warm = SpinConfiguration::random(n, &mut rng_from_seed(3));
    let s = sk_gibbs_sample(&w, beta, h, 50 * n as u64, &warm, 4).unwrap();
    assert!((s.magnetization() - q1).abs() <= 0.03, "{} vs {q1}", s.magnetization());
}

#[test]
fn exact_rgd_kernel_is_stationary_for_posterior() {
    let inst = assemble(8, 2.0, 31).unwrap();
    let kernel = ExactKernel::rgd(&inst, 0.4, &GaussRule::new(201).unwrap()).unwrap();
    assert!(kernel.stationarity_residual() <= 1e-6);
    // π is the scaled posterior
    let post = IsingModel::without_field(&inst.m_matrix, 0.4).unwrap();
    let exact = exact_enumerate(&post, 1.0).unwrap();
    let tv: f64 = exact.distribution.iter().zip(kernel.stationary()).map(|(a, b)| (a - b).abs()).sum();
    assert!(tv < 1e-12);
}

#[test]
fn energies_agree_with_enumeration_weights() {
    let inst = assemble(10, 2.0, 8).unwrap();
    let post = IsingModel::without_field(&inst.m_matrix, 1.0).unwrap();
    let lw = log_weights(&post, 0.7).unwrap();
    for (x, l) in lw.iter().enumerate().step_by(17) {
        let s = SpinConfiguration::from_index(x as u64, 10);
        let e = swlab_core::instances::posterior_energy(&s, &inst, 0.7).unwrap();
        assert!((e - l).abs() < 1e-12);
    }
}

#[test]
fn locally_stationary_average_obeys_entropy_bound() {
    let inst = assemble(6, 2.0, 12).unwrap();
    let beta = 0.9;
    let post = IsingModel::without_field(&inst.m_matrix, beta).unwrap();
    let rule = GaussRule::new(201).unwrap();
    for kernel in [ExactKernel::glauber(&post, 1.0).unwrap(), ExactKernel::rgd(&inst, beta, &rule).unwrap()] {
        let pi = kernel.stationary();
        let mode = (0..pi.len()).max_by(|&a, &b| pi[a].partial_cmp(&pi[b]).unwrap()).unwrap();
        let mut point = vec![0.0; pi.len()];
        point[mode] = 1.0;
        for horizon in [6usize, 10, 25, 60] {
            let avg = kernel.time_average(&point, horizon);
            let value = kernel.dirichlet(&avg).unwrap();
            assert!(value >= 0.0);
            assert!(value <= 6.0 * 2f64.ln() / horizon as f64 + 1e-9, "{:?} T={horizon}: {value}", kernel.kind());
        }
    }
}

#[test]
fn projected_step_matches_exact_conditional_mean() {
    // E[output] = E_g m(h(g)) with m(h) the exact magnetization of μ_{βW, h𝟙}
    let n = 10;
    let (beta, lambda, z) = (0.5, 2.0, 0.4);
    let w = sample_goe(n, 3).unwrap();
    let rule = GaussRule::new(201).unwrap();
    let bl = beta * lambda;
    let mut expected = 0.0;
    for (g, wt) in rule.points() {
        let h = bl * z + (bl / n as f64).sqrt() * g;
        let e = exact_enumerate(&IsingModel::new(&w, 1.0, vec![h; n]).unwrap(), beta).unwrap();
        expected += wt * e.magnetization;
    }
    let k = 4000;
    let outs: Vec<f64> = (0..k).map(|t| prgd_step(z, &w, beta, lambda, 2000, trial_seed(11, t)).unwrap()).collect();
    let mean = outs.iter().sum::<f64>() / k as f64;
    let sd = (outs.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt();
    assert!((mean - expected).abs() <= 3.0 * sd / (k as f64).sqrt(), "{mean} vs {expected}");
}

#[test]
fn projected_step_tracks_update_map() {
    let n = 2000;
    let w = sample_goe(n, 5).unwrap();
    let target = f_update(0.5, 0.8, 2.0, &ModelParams::default()).unwrap();
    let inner = swlab_core::dynamics::default_inner_steps(n);
    let r = prgd_step(0.5, &w, 0.8, 2.0, inner, 6).unwrap();
    assert!((r - target).abs() <= 0.05, "{r} vs {target}");
}

#[test]
fn curie_weiss_limits() {
    let root = mean_field_root(0.5, 0.2);
    assert!((root - (0.5 * root + 0.2f64).tanh()).abs() < 1e-12);
    for (beta, h, expected) in [(0.5, 0.2, root), (0.7, 0.0, 0.0), (2.0, 0.0, mean_field_root(2.0, 0.0))] {
        let t = curie_weiss_rgd(beta, h, 2000, 1000, 9).unwrap();
        let tail = &t.correlations()[500..];
        let limit = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((limit.abs() - expected).abs() <= 0.02, "β={beta} h={h}: {limit} vs {expected}");
    }
    assert!((mean_field_root(2.0, 0.0) - 0.9575).abs() < 1e-4);
}

#[test]
fn overlap_probe_matches_overlap_constant() {
    let w = sample_goe(2000, 44).unwrap();
    let p = overlap_concentration_probe(&w, 0.5, 0.3, 4, 40_000, 2).unwrap();
    assert!((p.mean_overlap - p.q_predicted).abs() <= 0.03, "{p:?}");
}

#[test]
fn overlap_variance_shrinks_with_size() {
    let mut vars = Vec::new();
    for (k, n) in [500usize, 1000, 2000].into_iter().enumerate() {
        let w = sample_goe(n, 70 + k as u64).unwrap();
        let p = overlap_concentration_probe(&w, 0.5, 0.3, 24, 20 * n as u64, 3).unwrap();
        vars.push(p.var_overlap);
    }
    assert!(vars[0] > vars[1] && vars[1] > vars[2], "{vars:?}");
}

#[test]
fn spin_flip_symmetry_in_distribution() {
    // M is invariant under x → −x, so RGD from −σ on the instance with spike −x
    // is the mirror image of RGD from σ: correlations with the original spike
    // change sign.
    let n = 200;
    let inst = assemble(n, 2.0, 6).unwrap();
    let flipped =
        swlab_core::instances::with_noise(inst.spike.negated(), inst.noise.clone(), 2.0, 6).unwrap();
    assert_eq!(flipped.m_matrix, inst.m_matrix);
    let trials = 40;
    let (mut a, mut b) = (vec![0.0; 11], vec![0.0; 11]);
    for t in 0..trials {
        let start = SpinConfiguration::random_with_mean(n, 0.3, &mut rng_from_seed(trial_seed(1, t)))
            .gauge(&inst.spike)
            .unwrap();
        let x = rgd_run(&start, &inst, 0.8, 10, 4000, trial_seed(2, t)).unwrap();
        let y = rgd_run(&start.negated(), &flipped, 0.8, 10, 4000, trial_seed(3, t)).unwrap();
        for s in 0..=10 {
            a[s] += x.entries[s].correlation / trials as f64;
            // y reports ⟨σ, −x⟩/n
            b[s] -= y.entries[s].correlation / trials as f64;
        }
    }
    for s in 0..=10 {
        assert!((a[s] + b[s]).abs() < 0.06, "step {s}: {} vs {}", a[s], b[s]);
    }

    // Glauber: negating start and field negates the magnetization path
    let w = sample_goe(n, 8).unwrap();
    let opts = GlauberOptions { record_every: Some(n as u64), ..Default::default() };
    let plus = IsingModel::new(&w, 0.5, vec![0.1; n]).unwrap();
    let minus = IsingModel::new(&w, 0.5, vec![-0.1; n]).unwrap();
    let (mut c, mut d) = (vec![0.0; 21], vec![0.0; 21]);
    for t in 0..trials {
        let start = SpinConfiguration::random(n, &mut rng_from_seed(trial_seed(4, t)));
        let x = glauber_run(&plus, &start, 20 * n as u64, trial_seed(5, t), &opts).unwrap();
        let y = glauber_run(&minus, &start.negated(), 20 * n as u64, trial_seed(6, t), &opts).unwrap();
        for s in 0..=20 {
            c[s] += x.trajectory.entries[s].correlation / trials as f64;
            d[s] += y.trajectory.entries[s].correlation / trials as f64;
        }
    }
    for s in 0..=20 {
        assert!((c[s] + d[s]).abs() < 0.03, "sweep {s}: {} vs {}", c[s], d[s]);
    }
    let ones = assemble_ones(n, 2.0, 6).unwrap();
    assert_eq!(ones.noise, inst.noise);
}
