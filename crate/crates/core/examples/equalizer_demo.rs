//! Two polarization tributaries mixed by a rotation and a phase offset,
//! separated again by the adaptive MIMO equalizer.

use mdmlink::dsp::{matched_filter, mimo_equalize, to_two_sps, EqualizerParams};
use mdmlink::metrics::compute_gmi;
use mdmlink::sigkit::evm_raw;
use mdmlink::txchain::{build_tributary, TxConfig};
use mdmlink::{ComplexFrame, Constellation, C64};

fn main() {
    let tx = TxConfig {
        n_symbols: 1 << 15,
        ..TxConfig::default()
    };
    let a = build_tributary(&tx, 1).unwrap();
    let b = build_tributary(&tx, 2).unwrap();
    let (c, s) = (0.6f64.cos(), 0.6f64.sin());
    let rot = C64::from_polar(1.0, 0.9);
    let (xa, xb) = (a.frame.channel(0), b.frame.channel(0));
    let ch0: Vec<C64> = xa.iter().zip(xb).map(|(p, q)| (p * c - q * s) * rot).collect();
    let ch1: Vec<C64> = xa.iter().zip(xb).map(|(p, q)| (p * s + q * c) * rot).collect();
    let x = ComplexFrame::new(vec![ch0, ch1], a.frame.sample_rate()).unwrap();
    let y = matched_filter(&to_two_sps(&x, tx.baud).unwrap(), &tx.rrc).unwrap();

    let refs = vec![a.reference, b.reference];
    let cons = Constellation::star_8qam();
    let params = EqualizerParams {
        n_train: 8000,
        ..EqualizerParams::default()
    };
    let out = mimo_equalize(&y, &refs, &params, &cons).unwrap();
    for (o, r) in refs.iter().enumerate() {
        let sym = &out.symbols[o];
        let bits = &r.bits[3 * out.start..3 * (out.start + sym.len())];
        println!(
            "output {o}: EVM {:.3}%  GMI {:.4}",
            100.0 * evm_raw(sym, &r.symbols[out.start..]),
            compute_gmi(sym, bits, &cons).unwrap()
        );
    }
    for o in 0..2 {
        let energy: Vec<String> = (0..2)
            .map(|i| format!("{:.3}", out.taps.taps(o, i).iter().map(|w| w.norm_sqr()).sum::<f64>()))
            .collect();
        println!("output {o} tap energy per input: [{}]", energy.join(", "));
    }
}
