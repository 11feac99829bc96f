//! Fixed instances for the criterion benchmarks.

use edrp_core::instance::{generate_synthetic, GeneratorConfig};
use edrp_core::Instance;

/// Delivery counts used by the planner benchmarks.
pub const SIZES: [usize; 4] = [25, 50, 100, 200];

/// Synthetic instance with `deliveries / ratio` EVs (at least one).
pub fn fixture(deliveries: usize, ratio: f64, cps: usize, seed: u64) -> Instance {
    let evs = ((deliveries as f64 / ratio).round() as usize).max(1);
    generate_synthetic(seed, deliveries, cps, evs, &GeneratorConfig::default())
        .expect("default generator config is valid")
}
