//! Regenerates the bundled synthetic fixture.
//!
//! ```text
//! cargo run -p epimap --example generate_fixture [-- <out-dir>]
//! ```

use std::path::PathBuf;

use epimap::synth::{generate, FIXTURE_SEED};

fn main() -> std::io::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic"));
    let corpus = generate(FIXTURE_SEED);
    corpus.write_to(&dir)?;
    let p = &corpus.planted;
    println!("wrote {} ({} articles, {} tweets)", dir.display(), p.articles, p.tweets);
    println!("{} filtered r = {:.4}", p.coupled_region, p.coupled_filtered_r);
    println!("{} filtered r = {:.4}", p.decoupled_region, p.decoupled_filtered_r);
    Ok(())
}
