//! Shared inputs for the criterion benchmarks.

use lorachan_core::reference;
use lorachan_core::trace::synth::{synthesize_series, CampaignConfig};
use lorachan_core::{Scenario, SnrSeries};

/// Four-receiver campaign with `n_bins` bins of `frames_per_bin` frames.
pub fn campaign(scenario: Scenario, n_bins: usize, frames_per_bin: usize) -> Vec<SnrSeries> {
    synthesize_series(&CampaignConfig {
        model: reference::scenario_model(scenario),
        n_receivers: 4,
        n_bins,
        frames_per_bin,
        first_bin: 2,
        seed: 1,
    })
    .expect("reference models are valid")
}
