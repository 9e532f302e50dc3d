//! Three transmitted modes received with 3 to 6 receivers. Extra receivers
//! collect power that mode coupling moved into the untransmitted modes.

use mdmlink::sim::{preset, run_experiment, RunOptions};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "paper3-calibrated".into());
    let mut spec = preset(&name).expect("known preset");
    spec.n_captures = 1;
    spec.sweep = vec![-6.0, -2.0, 2.0];
    let rs = run_experiment(&spec, &RunOptions::default()).unwrap();
    print!("power_dbm");
    for k in spec.subsets() {
        print!(",k{k}");
    }
    println!();
    for &p in &spec.sweep {
        print!("{p}");
        for k in spec.subsets() {
            print!(",{:.3}", rs.average(p, k).map(|r| r.mean_gmi()).unwrap_or(f64::NAN));
        }
        println!();
    }
}
