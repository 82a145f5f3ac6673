//! Regenerates the bundled edge lists in `fixtures/`.
//!
//!     cargo run -p hin-recovery-cli --example gen_fixture

use std::fs;
use std::path::Path;

use hin_recovery::synthetic::{reply_example, planted_twitter, PlantedConfig};
use hin_recovery::TypedGraph;
use hin_recovery_cli::ingest::{dump, EdgeList};

fn named(graph: TypedGraph) -> EdgeList {
    let ids = graph
        .node_types()
        .iter()
        .map(|t| {
            let prefix = &t.name[..1];
            (1..=t.count).map(|i| format!("{prefix}{i}")).collect()
        })
        .collect();
    EdgeList { graph, ids }
}

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    fs::create_dir_all(&dir)?;
    let planted = named(planted_twitter(1, &PlantedConfig::default()));
    fs::write(
        dir.join("planted.tsv"),
        format!("# planted_twitter(seed 1): UH follows 0.58 RT-UH + 0.40 RP-UH + noise\n{}", dump(&planted)),
    )?;
    let replies = named(reply_example());
    fs::write(dir.join("replies.tsv"), format!("# four users replying and posting hashtags\n{}", dump(&replies)))?;
    Ok(())
}
