mod common;

use mdmlink::dsp::{self, TapTensor};
use mdmlink::matrix::CMatrix;
use mdmlink::metrics::{compute_gmi, compute_mdl, mdl_from_taps};
use mdmlink::txchain::{build_tributary, TxConfig};
use mdmlink::{ComplexFrame, Constellation, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gauss_hermite_integrates_moments() {
    let (x, w) = common::gauss_hermite(20);
    let pi = std::f64::consts::PI;
    let m0: f64 = w.iter().sum();
    let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
    assert!((m0 - pi.sqrt()).abs() < 1e-12);
    assert!((m2 - pi.sqrt() / 2.0).abs() < 1e-12);
    assert!((m4 - 0.75 * pi.sqrt()).abs() < 1e-12);
}

#[test]
fn gmi_at_10_db_matches_integration() {
    let c = Constellation::star_8qam();
    let (rx, bits) = common::awgn_stream(&c, 10.0, 200_000, 9);
    let g = compute_gmi(&rx, &bits, &c).unwrap();
    let o = common::gmi_oracle(&c, 10.0, 48);
    assert!((g - o).abs() < 0.01, "{g} vs {o}");
}

#[test]
fn gmi_oracle_converges_in_node_count() {
    let c = Constellation::star_8qam();
    let a = common::gmi_oracle(&c, 6.0, 32);
    let b = common::gmi_oracle(&c, 6.0, 64);
    assert!((a - b).abs() < 1e-6);
}

#[test]
fn pure_noise_carries_nothing() {
    let c = Constellation::star_8qam();
    let (rx, bits) = common::awgn_stream(&c, -40.0, 50_000, 4);
    assert!(compute_gmi(&rx, &bits, &c).unwrap() <= 0.05);
}

#[test]
fn gmi_rises_with_snr() {
    let c = Constellation::star_8qam();
    let mut last = 0.0;
    for snr in 0..=20 {
        let (rx, bits) = common::awgn_stream(&c, snr as f64, 40_000, 77);
        let g = compute_gmi(&rx, &bits, &c).unwrap();
        assert!(g <= 3.0);
        assert!(g >= last - 0.005, "{snr} dB: {g} < {last}");
        last = g;
    }
}

#[test]
fn mdl_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h: Vec<CMatrix> = (0..512).map(|_| common::random_matrix(12, 12, &mut rng)).collect();
    let got = compute_mdl(&h).unwrap();
    let want = common::mdl_oracle(&h);
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

fn unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    common::random_matrix(n, n, rng).qr().q()
}

#[test]
fn zero_forcing_taps_recover_mdl() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 12;
    let gains = CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            // eigenvalues of HᴴH spread evenly over 5.5 dB
            C64::new(10f64.powf(5.5 * r as f64 / (n - 1) as f64 / 20.0), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let h = unitary(n, &mut rng) * gains * unitary(n, &mut rng);
    assert!((compute_mdl(&[h.clone()]).unwrap() - 5.5).abs() < 1e-9);
    let inv = h.try_inverse().unwrap();
    let len = 21;
    let mut taps = TapTensor::zeros(n, n, len);
    for o in 0..n {
        for i in 0..n {
            taps.taps_mut(o, i)[len / 2] = inv[(o, i)];
        }
    }
    let est = mdl_from_taps(&taps, 0.5).unwrap();
    assert!((est - 5.5).abs() < 0.2, "{est}");
}

#[test]
fn identity_taps_have_no_mdl() {
    let taps = TapTensor::center_identity(6, 6, 11);
    assert!(mdl_from_taps(&taps, 0.5).unwrap().abs() < 1e-9);
}

fn fo_frame() -> (ComplexFrame, Vec<mdmlink::txchain::Reference>, f64) {
    let tx = TxConfig {
        n_symbols: 1 << 15,
        ..TxConfig::default()
    };
    let t = build_tributary(&tx, 21).unwrap();
    let x = dsp::matched_filter(&dsp::to_two_sps(&t.frame, tx.baud).unwrap(), &tx.rrc).unwrap();
    (x, vec![t.reference], tx.baud)
}

#[test]
fn frequency_estimate_is_equivariant() {
    let (x, refs, baud) = fo_frame();
    let base = dsp::estimate_frequency_offset(&x, &refs, baud, 32, 4).unwrap().hz;
    assert!(base.abs() < 1e6, "{base}");
    for f in [100e6, -37e6, 250e6] {
        let shifted = x.frequency_shift(f);
        let est = dsp::estimate_frequency_offset(&shifted, &refs, baud, 32, 4).unwrap().hz;
        assert!((est - base - f).abs() < 1e6, "{f}: {est}");
    }
}
