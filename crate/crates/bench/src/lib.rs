//! Fixtures shared by the benchmarks.

use enercoop_core::{BsRole, SimConfig};

/// Reference scenario cut to `slots` slots.
pub fn reference_config(slots: usize) -> SimConfig {
    SimConfig {
        horizon_slots: slots,
        ..SimConfig::reference()
    }
}

/// A crowded slot on the default grid: every third station a source, every
/// third a consumer, with uneven amounts so tie-breaks do some work.
pub fn busy_roles(n: usize) -> Vec<BsRole> {
    (0..n)
        .map(|i| match i % 3 {
            0 => BsRole::Source {
                surplus_j: 20_000.0 + 9_000.0 * (i % 7) as f64,
            },
            1 => BsRole::Consumer {
                demand_j: 5_000.0 + 11_000.0 * (i % 5) as f64,
            },
            _ => BsRole::Neutral,
        })
        .collect()
}
