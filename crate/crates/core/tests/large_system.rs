//! Monte Carlo behaviour of the full system at finite size.

use dfmud_core::codec::{estimate_gcurve, BlockFading, Codec, CodecSampler, CodecSpec};
use dfmud_core::pipeline::{run_iterative_receiver, ReceiverMode, ReceiverSettings};
use dfmud_core::rmt::empirical_eigen_moments;
use dfmud_core::{Sequential, SystemConfig};

// E tr((SᵀS/M)²)/(NM) for i.i.d. ±1/√N chips, exact at finite N and M.
fn exact_second_moment(beta_prime: f64, n: usize, m: usize) -> f64 {
    beta_prime + beta_prime * beta_prime - beta_prime / (n * m) as f64
}

#[test]
fn independent_codes_match_the_finite_size_second_moment() {
    let cfg = SystemConfig::new(40, 100, 5, 10)
        .with_snr_db(10.0)
        .with_seed(11);
    let r = empirical_eigen_moments(&cfg, 2, 200, &Sequential).unwrap();
    let want = exact_second_moment(r.beta_prime, 100, 10);
    assert!((want - 0.2398).abs() < 1e-12);
    let (mean, se) = r.independent[1];
    assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want} (se {se})");
    assert!((r.independent[0].0 - r.beta_prime).abs() < 1e-12);
}

#[test]
fn code_models_agree_at_moderate_size() {
    let cfg = SystemConfig::new(40, 100, 5, 10)
        .with_snr_db(10.0)
        .with_seed(12);
    let r = empirical_eigen_moments(&cfg, 4, 200, &Sequential).unwrap();
    for m in 1..=4 {
        let gap = r.shifted[m - 1].0 - r.independent[m - 1].0;
        let se = r.combined_std_error(m);
        assert!(
            gap.abs() <= 3.0 * se.max(1e-12),
            "m={m}: gap {gap}, se {se}"
        );
    }
}

#[test]
fn shifted_moments_approach_the_limit_as_the_system_grows() {
    let mut gaps = Vec::new();
    for k in [10, 20, 40, 80] {
        let cfg = SystemConfig::new(k, k, 2, 4).with_snr_db(10.0).with_seed(7);
        let r = empirical_eigen_moments(&cfg, 4, 400, &Sequential).unwrap();
        assert!((r.beta_prime - 0.5).abs() < 1e-12);
        gaps.push([2, 3, 4].map(|m| (r.shifted[m - 1].0 - r.analytic[m - 1]).abs()));
    }
    for w in gaps.windows(2) {
        assert!(w[1].iter().zip(&w[0]).all(|(b, a)| b < a), "{gaps:?}");
    }
    assert!(gaps[3][2] < gaps[0][2] / 4.0, "{gaps:?}");
}

#[test]
fn genie_feedback_reproduces_the_single_user_fading_curve() {
    let codec = Codec::new(CodecSpec::convolutional()).unwrap();
    let sampler = CodecSampler {
        codec: codec.clone(),
        fading: Some(BlockFading {
            paths: 1,
            block_length: 8,
        }),
    };
    for snr in [0.0, 1.0] {
        let cfg = SystemConfig::new(4, 16, 1, 8).with_snr_db(snr).with_seed(5);
        let settings = ReceiverSettings::new(ReceiverMode::Genie, 100)
            .with_iterations(1)
            .with_seed(5);
        let tr = run_iterative_receiver(&cfg, &codec, None, &settings, &Sequential).unwrap();
        let genie = tr.final_record().pe;
        let g = estimate_gcurve(&sampler, &[cfg.noise_variance], 400, 6, &Sequential).unwrap();
        let single = g.samples[0].raw_pe;
        // errors cluster inside codewords, so binomial errors understate the spread
        assert!(
            (genie - single).abs() < 0.2 * single,
            "{snr} dB: {genie} vs {single}"
        );
    }
}

#[test]
fn feedback_iterations_improve_until_the_load_is_too_high() {
    let codec = Codec::new(CodecSpec::convolutional()).unwrap();
    let settings = ReceiverSettings::new(ReceiverMode::Iterative, 8).with_seed(3);

    let moderate = SystemConfig::new(20, 32, 5, 20)
        .with_training(4)
        .with_snr_db(5.0)
        .with_seed(3);
    let tr = run_iterative_receiver(&moderate, &codec, None, &settings, &Sequential).unwrap();
    let pe: Vec<f64> = tr.records.iter().map(|r| r.pe).collect();
    assert!(pe.windows(2).all(|w| w[1] <= w[0]), "{pe:?}");
    assert!(tr.final_record().pe < pe[0] / 100.0, "{pe:?}");

    let overloaded = SystemConfig::new(12, 32, 5, 10)
        .with_training(2)
        .with_snr_db(5.0)
        .with_seed(3);
    let tr = run_iterative_receiver(&overloaded, &codec, None, &settings, &Sequential).unwrap();
    let first = tr.records[0].pe;
    assert!(first > 0.3);
    assert!(tr.final_record().pe > 0.9 * first, "{:?}", tr.records);
}
