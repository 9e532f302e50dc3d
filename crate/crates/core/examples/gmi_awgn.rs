//! GMI of star 8QAM over an AWGN channel, swept over SNR.

use mdmlink::metrics::compute_gmi;
use mdmlink::sigkit::generate_prbs;
use mdmlink::{Constellation, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let c = Constellation::star_8qam();
    let n = 100_000;
    let bits = generate_prbs(23, 3 * n, 1).unwrap();
    let tx = c.map(&bits).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("snr_db,gmi");
    for snr in (0..=20).step_by(2) {
        let sigma = (10f64.powf(-snr as f64 / 10.0) / 2.0).sqrt();
        let noise = Normal::new(0.0, sigma).unwrap();
        let rx: Vec<C64> = tx
            .iter()
            .map(|x| x + C64::new(noise.sample(&mut rng), noise.sample(&mut rng)))
            .collect();
        println!("{snr},{:.4}", compute_gmi(&rx, &bits, &c).unwrap());
    }
}
