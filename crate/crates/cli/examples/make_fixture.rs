//! Regenerate the bundled fixture corpus and labels.
//!
//! Usage: `cargo run -p attrib-cli --example make_fixture [OUT_DIR]`
//! (default `crates/cli/tests/fixtures`).

use std::path::PathBuf;

use attrib_cli::synth::{generate, write_fixture, DEFAULT_SEED, PUBLISHERS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    let fixture = generate(&PUBLISHERS, DEFAULT_SEED)?;
    write_fixture(&fixture, &out.join("corpus"), &out.join("labels.csv"))?;
    println!("wrote {} articles, {} labels to {}", fixture.articles.len(), fixture.labels.len(), out.display());
    Ok(())
}
