#![allow(dead_code)]

use std::path::PathBuf;

use emospan::data::synthetic::trigger_dataset;
use emospan::data::{load_ec_tsv, Dataset, Split};
use emospan::labels::default_semeval_space;
use emospan::trainer::TrainConfig;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load_fixture(split: Split) -> Dataset {
    let name = match split {
        Split::Train => "ec_fixture-train.txt",
        Split::Valid => "ec_fixture-dev.txt",
        Split::Test => "ec_fixture-test.txt",
    };
    load_ec_tsv(&fixture(name), &default_semeval_space(), split).unwrap()
}

/// 32 trigger-token examples, and the same examples tagged as validation data.
pub fn overfit_data() -> (Dataset, Dataset) {
    let train = trigger_dataset(&default_semeval_space(), 32, 3, Split::Train, 1).unwrap();
    let mut valid = train.clone();
    valid.split = Split::Valid;
    (train, valid)
}

/// Toy-encoder settings that fit the trigger data; the table defaults are
/// tuned for a pretrained encoder and move a random one too slowly.
pub fn overfit_config() -> TrainConfig {
    TrainConfig {
        epochs: 200,
        early_stop_patience: 25,
        batch_size: 8,
        lr_encoder: 1e-2,
        lr_head: 1e-2,
        eval_train: true,
        seed: 17,
        ..Default::default()
    }
}

/// Cheap settings for wiring tests.
pub fn quick_config() -> TrainConfig {
    TrainConfig { epochs: 3, early_stop_patience: 3, batch_size: 8, toy_width: 8, ..Default::default() }
}
