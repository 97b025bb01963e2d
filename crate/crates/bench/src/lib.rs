//! Fixtures shared by the benchmarks.

use privsense::{ClassifierParams, Label, OneClassClassifier, OneClassState, SimConfig};

/// Classifier whose window is full of evenly spread normal values.
pub fn full_classifier(params: ClassifierParams) -> OneClassState {
    let mut c = OneClassState::new(params);
    let n = params.window_size;
    for i in 0..n {
        c.train((i as f64 / n as f64 - 0.5) * 4.0, Label::Normal);
    }
    c
}

/// Default distributed setup with `num_sensors` sensors and `iterations` steps.
pub fn distributed(num_sensors: usize, iterations: usize) -> SimConfig {
    SimConfig { num_sensors, iterations, ..SimConfig::default() }
}
