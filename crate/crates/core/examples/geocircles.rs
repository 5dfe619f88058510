//! Geo-circle layout for one location and its emphasized form, as JSON.
//!
//! ```text
//! cargo run -p epimap --example geocircles
//! ```

use epimap::layout::{emphasize, layout_geocircles};
use epimap::{GeoPoint, VariableKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let center = GeoPoint::new(61.2, 8.4)?;
    let values = [
        (VariableKind::Confirmed, 1800.0),
        (VariableKind::Active, 950.0),
        (VariableKind::Deaths, 54.0),
        (VariableKind::Recovered, 0.0),
        (VariableKind::NewsCount, 37.0),
    ];
    let set = layout_geocircles(center, &values, 1)?;
    println!("{}", serde_json::to_string_pretty(&set)?);
    let hot = emphasize(&set);
    assert_eq!(emphasize(&hot), hot);
    for c in &hot.circles {
        println!("{:<10} r={:>6.2} stroke {}", c.variable.name(), c.radius_px, c.stroke_px);
    }
    Ok(())
}
