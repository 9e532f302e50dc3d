//! Link figures of merit: GMI, FEC-limited net rate, MDL and crosstalk.

mod crosstalk;
mod gmi;
mod mdl;
mod rate;
mod report;

pub use crosstalk::{crosstalk_matrices, CrosstalkMatrices, XT_FLOOR_DB};
pub use gmi::{compute_gmi, hard_ber, MISALIGNED_BER};
pub use mdl::{averaged_eigenvalues, compute_mdl, mdl_from_taps, tap_response};
pub use rate::{net_rate, FecModel, RateReport};
pub use report::{average_captures, MetricsReport};
