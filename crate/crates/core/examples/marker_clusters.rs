//! Grid clustering of random points at several zoom levels, with marker sizes.
//!
//! ```text
//! cargo run -p epimap --example marker_clusters
//! ```

use epimap::index::cluster_markers;
use epimap::layout::{marker_color, marker_radius};
use epimap::{GeoPoint, LocationId, VariableKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<(LocationId, GeoPoint, f64)> = (0..200)
        .map(|i| {
            let p = GeoPoint::new(rng.gen_range(35.0..60.0), rng.gen_range(-10.0..30.0)).unwrap();
            (LocationId(i), p, rng.gen_range(1..40) as f64)
        })
        .collect();

    for zoom in [2, 4, 6] {
        let markers = cluster_markers(&points, zoom, VariableKind::Confirmed);
        println!("zoom {zoom}: {} markers", markers.len());
        for m in markers.iter().take(5) {
            println!(
                "  cell {:>5} n={:<3} count={:<5} at ({:.2},{:.2}) radius {:.1}px {:?}",
                m.cell,
                m.locations.len(),
                m.count,
                m.point.lat(),
                m.point.lon(),
                marker_radius(m.locations.len() as f64).unwrap(),
                marker_color(m.locations.len() as f64)
            );
        }
    }
}
