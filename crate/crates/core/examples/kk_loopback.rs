//! Noiseless transmitter to Kramers-Kronig receiver loopback: EVM against
//! carrier-to-signal power ratio.

use mdmlink::dsp::loopback_evm;
use mdmlink::kk::{receive_tributary, KkConfig};
use mdmlink::txchain::{build_tributary, TxConfig};

fn main() {
    let tx = TxConfig::default();
    let t = build_tributary(&tx, 1).unwrap();
    println!("cspr_db,bias,evm_percent,clamped");
    for cspr in (4..=16).step_by(2) {
        let cfg = KkConfig {
            cspr_db: cspr as f64,
            residual_offset_hz: 0.0,
            ..KkConfig::default()
        };
        let rx = receive_tributary(&t.frame, &cfg).unwrap();
        let evm = loopback_evm(&rx.frame, &t.reference.symbols, tx.baud, &tx.rrc, 64).unwrap();
        println!("{cspr},{:.4e},{:.3},{}", rx.bias.bias, 100.0 * evm, rx.clamped_samples);
    }
}
