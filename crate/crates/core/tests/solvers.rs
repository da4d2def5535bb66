use num_complex::Complex64 as C64;

use tomokit::measurement::{expectation, husimi_operators_on, number_operators, ExpectationVector, Grid, SetKind};
use tomokit::noise::mix_with_random;
use tomokit::states::{cat, coherent, fock, num, num_entry, Parity};
use tomokit::tomography::{discriminator_pretrain_sanity, discriminator_separation, gan_reconstruct, mle_reconstruct, GANConfig, MLEConfig};
use tomokit::{fidelity, DensityMatrix};

#[test]
fn mle_starting_at_the_optimum_stops_immediately() {
    let dim = 6;
    let set = number_operators(dim);
    let data = expectation(&DensityMatrix::maximally_mixed(dim), &set).unwrap();
    let result = mle_reconstruct(&data.into(), &set, &MLEConfig::default(), None).unwrap();
    assert!(result.converged);
    assert_eq!(result.epochs_run, 0);
}

fn noisy_num(dim: usize, seed: u64) -> DensityMatrix {
    let clean = num(dim, &num_entry("M2").unwrap().complex_amplitudes()).unwrap();
    mix_with_random(&clean, 0.2, seed).unwrap()
}

#[test]
fn mle_is_deterministic_and_ascends() {
    let dim = 8;
    let set = husimi_operators_on(dim, Grid::square(-5.0, 5.0, 12).unwrap()).unwrap();
    let truth = noisy_num(dim, 4);
    let data = expectation(&truth, &set).unwrap();
    let cfg = MLEConfig { max_epochs: 400, ..MLEConfig::default() };
    let a = mle_reconstruct(&data.clone().into(), &set, &cfg, Some(&truth)).unwrap();
    let b = mle_reconstruct(&data.into(), &set, &cfg, Some(&truth)).unwrap();
    assert_eq!(a.fidelity_history, b.fidelity_history);
    assert_eq!(a.loss_history, b.loss_history);
    assert_eq!(a.reconstructed_dm, b.reconstructed_dm);

    // loss is −ℓ
    let loss: Vec<f64> = a.loss_history.iter().map(|&(_, l)| l).collect();
    assert!(loss.last().unwrap() <= &loss[0]);
    for w in 0..loss.len().saturating_sub(50) {
        assert!(loss[w + 50] <= loss[w] + 1e-6, "window at epoch {w}");
    }
    assert!(a.fidelity_history.windows(2).all(|w| w[0].0 < w[1].0));
    a.reconstructed_dm.validate(1e-10).unwrap();
}

#[test]
fn mle_recovers_pure_states_from_exact_data() {
    let dim = 8;
    let set = husimi_operators_on(dim, Grid::square(-5.0, 5.0, 16).unwrap()).unwrap();
    let truths = [fock(dim, 2).unwrap(), coherent(dim, C64::new(0.6, -0.4)).unwrap(), cat(dim, C64::new(1.0, 0.0), Parity::Even).unwrap()];
    let cfg = MLEConfig { max_epochs: 3000, ..MLEConfig::default() };
    for truth in &truths {
        let data = expectation(truth, &set).unwrap();
        let result = mle_reconstruct(&data.into(), &set, &cfg, None).unwrap();
        let f = fidelity(&result.reconstructed_dm, truth).unwrap();
        assert!(f >= 0.99, "fidelity {f}");
    }
}

#[test]
fn removing_mixing_noise_does_not_hurt_mle() {
    let dim = 8;
    let set = husimi_operators_on(dim, Grid::square(-5.0, 5.0, 12).unwrap()).unwrap();
    let clean = num(dim, &num_entry("M2").unwrap().complex_amplitudes()).unwrap();
    let cfg = MLEConfig { max_epochs: 500, ..MLEConfig::default() };
    let run = |rho: &DensityMatrix| {
        let data = expectation(rho, &set).unwrap();
        fidelity(&mle_reconstruct(&data.into(), &set, &cfg, None).unwrap().reconstructed_dm, &clean).unwrap()
    };
    let quiet = run(&clean);
    let mut noisy: Vec<f64> = (0..5).map(|s| run(&mix_with_random(&clean, 0.2, s).unwrap())).collect();
    noisy.sort_by(f64::total_cmp);
    assert!(quiet >= noisy[2], "{quiet} < median {}", noisy[2]);
}

#[test]
fn gan_is_deterministic_with_finite_losses() {
    let dim = 4;
    let set = husimi_operators_on(dim, Grid::square(-4.0, 4.0, 8).unwrap()).unwrap();
    let truth = fock(dim, 1).unwrap();
    let data = expectation(&truth, &set).unwrap();
    let cfg = GANConfig { epochs: 60, seed: 9, ..GANConfig::default() };
    let a = gan_reconstruct(&data, &set, &cfg, Some(&truth)).unwrap();
    let b = gan_reconstruct(&data, &set, &cfg, Some(&truth)).unwrap();
    assert_eq!(a.fidelity_history, b.fidelity_history);
    assert_eq!(a.reconstructed_dm, b.reconstructed_dm);
    assert!(a.loss_history.iter().chain(&a.disc_loss_history).all(|(_, l)| l.is_finite()));
    assert_eq!(a.loss_history.len(), cfg.epochs + 1);
    let best = a.loss_history.iter().map(|&(_, l)| l).fold(f64::INFINITY, f64::min);
    assert_eq!(a.loss_history[a.selected_epoch].1, best);
    a.reconstructed_dm.validate(1e-10).unwrap();
}

#[test]
fn discriminator_cannot_separate_identical_inputs() {
    let data = ExpectationVector { values: vec![0.25; 16], set_kind: SetKind::HusimiGrid };
    let acc = discriminator_pretrain_sanity(&GANConfig::default(), &data, 1).unwrap();
    assert!((0.35..=0.65).contains(&acc), "accuracy {acc}");
}

#[test]
fn discriminator_separates_disjoint_one_hot_inputs() {
    let mut real = vec![0.0; 10];
    let mut fake = vec![0.0; 10];
    real[2] = 1.0;
    fake[7] = 1.0;
    let cfg = GANConfig::default();
    let acc = discriminator_separation(&cfg, &real, &fake, 4).unwrap();
    assert_eq!(acc, 1.0);
    assert_eq!(acc, discriminator_separation(&cfg, &real, &fake, 4).unwrap());
}
