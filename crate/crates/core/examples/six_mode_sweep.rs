//! Launch-power sweep of the six-mode preset. Pass powers in dBm as
//! arguments to override the default sweep, e.g. `-- -2 4 10`.

use mdmlink::sim::{preset, run_experiment, RunOptions};

fn main() {
    let mut spec = preset("paper6").unwrap();
    spec.n_captures = 1;
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    spec.sweep = if args.is_empty() { vec![-6.0, 0.0, 6.0, 12.0] } else { args };
    let rs = run_experiment(&spec, &RunOptions::default()).unwrap();
    println!("power_dbm,mean_gmi,ngmi,net_gbps,mdl_db");
    for &p in &spec.sweep {
        match rs.average(p, 6) {
            Some(r) => println!(
                "{p},{:.4},{:.4},{:.1},{:.2}",
                r.mean_gmi(),
                r.ngmi,
                r.net_rate_gbps,
                r.mdl_db.unwrap_or(f64::NAN)
            ),
            None => println!("{p},failed"),
        }
    }
}
