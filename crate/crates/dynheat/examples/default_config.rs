//! Print the default run configuration as JSON, a starting point for `dynheat --config`.
//!
//!     cargo run --example default_config > run.json

use dynheat::cli::RunConfig;

fn main() {
    println!("{}", serde_json::to_string_pretty(&RunConfig::default()).expect("config serialises"));
}
