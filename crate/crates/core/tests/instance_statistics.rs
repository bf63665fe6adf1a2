use nalgebra::DMatrix;
use proptest::prelude::*;
use swlab_core::instances::{
    assemble, correlation_spins, posterior_energy, sample_goe, sample_spike,
};
use swlab_core::rng::rng_from_seed;
use swlab_core::SpinConfiguration;

fn to_dense(a: &ndarray::Array2<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_row_slice(n, n, a.as_slice().unwrap())
}

fn eigenvalues(a: &ndarray::Array2<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = to_dense(a).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[test]
fn goe_entry_variances() {
    let n = 2000;
    let w = sample_goe(n, 11).unwrap();
    let (mut off, mut count) = (0.0, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            off += w[[i, j]] * w[[i, j]];
            count += 1;
        }
    }
    let off = off / count as f64;
    let diag = (0..n).map(|i| w[[i, i]] * w[[i, i]]).sum::<f64>() / n as f64;
    let inv_n = 1.0 / n as f64;
    assert!((off - inv_n).abs() <= 0.05 * inv_n, "off-diagonal variance {off}");
    assert!((diag - 2.0 * inv_n).abs() <= 0.15 * 2.0 * inv_n, "diagonal variance {diag}");
}

#[test]
fn goe_operator_norm_near_semicircle_edge() {
    let ev = eigenvalues(&sample_goe(500, 4).unwrap());
    let norm = ev[0].abs().max(ev[ev.len() - 1].abs());
    assert!((1.8..=2.2).contains(&norm), "operator norm {norm}");
}

#[test]
fn top_eigenvalue_separates_above_threshold() {
    let inst = assemble(1000, 2.0, 21).unwrap();
    let ev = eigenvalues(&inst.m_matrix);
    let top = ev[ev.len() - 1];
    assert!((top - 2.5).abs() <= 0.15, "top eigenvalue {top}");
}

#[test]
fn spike_mean_concentrates() {
    // P(|mean| > 0.05) at n = 10^4 is about 6e-7 per seed
    for seed in 0..50 {
        let m = sample_spike(10_000, seed).magnetization();
        assert!(m.abs() <= 0.05, "seed {seed}: mean {m}");
    }
}

#[test]
fn independent_signs_are_nearly_orthogonal() {
    let mut rng = rng_from_seed(5);
    for _ in 0..20 {
        let a = SpinConfiguration::random(10_000, &mut rng);
        let b = SpinConfiguration::random(10_000, &mut rng);
        assert!(correlation_spins(&a, &b).unwrap().abs() <= 0.05);
    }
}

#[test]
fn energies_reproduce_gibbs_weights_at_ten_spins() {
    let n = 10;
    let beta = 0.7;
    let inst = assemble(n, 1.5, 3).unwrap();
    let energies: Vec<f64> = (0..1u64 << n)
        .map(|k| posterior_energy(&SpinConfiguration::from_index(k, n), &inst, beta).unwrap())
        .collect();
    // independent double loop over all pairs
    for (k, e) in energies.iter().enumerate() {
        let s = SpinConfiguration::from_index(k as u64, n).to_f64();
        let mut direct = 0.0;
        for i in 0..n {
            for j in 0..n {
                direct += s[i] * inst.m_matrix[[i, j]] * s[j];
            }
        }
        assert!((0.5 * beta * direct - e).abs() < 1e-12);
    }
    // global flip symmetry of the quadratic energy
    for k in 0..1usize << n {
        let flipped = !k & ((1 << n) - 1);
        assert!((energies[k] - energies[flipped]).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assemble_is_deterministic_and_symmetric(n in 1usize..40, lambda in 0.0f64..5.0, seed: u64) {
        let a = assemble(n, lambda, seed).unwrap();
        let b = assemble(n, lambda, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a.m_matrix, &a.m_matrix.t());
        prop_assert_eq!(&a.noise, &a.noise.t());
    }

    #[test]
    fn correlation_is_bounded(n in 1usize..200, seed: u64) {
        let mut rng = rng_from_seed(seed);
        let a = SpinConfiguration::random(n, &mut rng);
        let b = SpinConfiguration::random(n, &mut rng);
        let r = correlation_spins(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert_eq!(correlation_spins(&a, &b.negated()).unwrap(), -r);
    }
}
