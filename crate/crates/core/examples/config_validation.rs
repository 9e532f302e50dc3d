//! Layered TOML configuration: defaults, presets, overrides and the full
//! list of problems for a broken file.

use mdmlink::sim::validate_spec;

fn main() {
    let good = r#"
preset = "paper3"
sweep = [0.0, 4.0]
n_captures = 2

[link]
inter_group_xt_db = -18.0
"#;
    let s = validate_spec(good).unwrap();
    println!(
        "{}: {} tx modes, rx {:?}, xt {} dB, MDL {} dB",
        s.name,
        s.transmitted_modes(),
        s.subsets(),
        s.link.inter_group_xt_db,
        s.link.target_mdl_db
    );

    let bad = r#"
rx_subsets = [2, 9]
n_captures = 0

[tx.rrc]
roll_off = 1.5
"#;
    for issue in validate_spec(bad).unwrap_err() {
        println!("  {issue}");
    }
    for issue in validate_spec("sweep = [1.0,\n").unwrap_err() {
        println!("  {issue}");
    }
}
