//! Fixtures shared by the benchmarks in `benches/`.

use bellsim_core::models::generators::{random_contextual_product, GenSizes};
use bellsim_core::{demo_model, run_timeseries_protocol, Dataset, Model, Schedule};

/// A contextual product model with `size` source values per side and
/// `size` instrument values per setting.
pub fn product_model(size: usize) -> Model {
    random_contextual_product(
        7,
        GenSizes {
            source: size,
            instrument: size,
        },
    )
    .build()
    .expect("generated recipe builds")
}

/// Click streams of the shipped time-tag demo.
pub fn timetag_streams(emissions: u64) -> Dataset {
    let model = demo_model("demo_timetag").expect("shipped demo");
    run_timeseries_protocol(&model, emissions, Schedule::Random, 2.0, 1).expect("valid protocol")
}
