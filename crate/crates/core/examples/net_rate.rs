//! Line and post-FEC net rates of the built-in presets.

use mdmlink::metrics::net_rate;
use mdmlink::sim::{preset, preset_names};

fn main() {
    for name in preset_names() {
        let s = preset(name).unwrap();
        let modes = s.transmitted_modes();
        for gmi in [3.0, 2.7, 2.5] {
            let r = net_rate(&vec![gmi; modes], s.tx.baud, &s.fec, 2 * modes, 3);
            println!(
                "{name:<18} GMI {gmi:.2}  NGMI {:.3}  line {:8.2} Gb/s  net {:8.2} Gb/s{}",
                r.ngmi,
                r.line_rate_gbps,
                r.net_rate_gbps,
                if r.below_threshold { "  (below FEC threshold)" } else { "" }
            );
        }
    }
}
