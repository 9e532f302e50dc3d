//! Spatial and mode-group crosstalk seen by the equalizer for the 3-mode
//! transmitter with all six receivers active.

use mdmlink::sim::{preset, run_experiment, RunOptions};

fn print_grid(title: &str, rows: &[String], cols: &[String], m: &[Vec<f64>]) {
    println!("{title}");
    println!("{:>8} {}", "", cols.iter().map(|c| format!("{c:>7}")).collect::<String>());
    for (r, row) in rows.iter().zip(m) {
        println!("{r:>8} {}", row.iter().map(|v| format!("{v:7.1}")).collect::<String>());
    }
}

fn main() {
    let mut spec = preset("paper3").unwrap();
    spec.rx_subsets = vec![6];
    spec.n_captures = 1;
    spec.sweep = vec![6.0];
    let rs = run_experiment(&spec, &RunOptions::default()).unwrap();
    let xt = rs.average(6.0, 6).and_then(|r| r.crosstalk.clone()).expect("successful point");
    let spatial = xt.spatial_db();
    print_grid(
        "spatial (dB, rows rx, cols tx)",
        &rs.mode_names[..spatial.len()],
        &rs.mode_names[..spatial[0].len()],
        &spatial,
    );
    let label = |g: &usize| format!("MG{}", g + 1);
    print_grid(
        "mode groups (dB)",
        &xt.rx_groups.iter().map(label).collect::<Vec<_>>(),
        &xt.tx_groups.iter().map(label).collect::<Vec<_>>(),
        &xt.group_db(),
    );
}
