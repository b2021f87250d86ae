//! Shared fixtures for the criterion benchmarks.

use tsexplain_core::{
    make_spike_dataset, split_dataset, train_generator, train_predictor, Dataset, GeneratorMode,
    GeneratorModel, PredictorModel, SpikeConfig, TrainConfig,
};

/// A small trained spike setup: big enough that per-sample explainer cost is
/// representative, small enough that the one-off training stays in seconds.
pub fn bench_fixture() -> (PredictorModel, GeneratorModel, Dataset) {
    let mut config = SpikeConfig::spike(120, 11);
    config.num_steps = 40;
    let data = make_spike_dataset(&config).unwrap();
    let (train, test) = split_dataset(&data, 0.75, config.seed).unwrap();
    let tc = TrainConfig {
        hidden: 32,
        epochs: 8,
        batch_size: 16,
        learning_rate: 2e-3,
        grad_clip: 5.0,
        patience: 8,
        seed: config.seed,
    };
    let (predictor, _) = train_predictor(&train, None, &tc).unwrap();
    let (generator, _) = train_generator(&train, &tc, GeneratorMode::PerFeature).unwrap();
    (predictor, generator, test)
}
