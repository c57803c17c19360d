//! Parse a tracker CSV with dropouts and repair it.
//!
//! Trackers lose frames: blinks take out the pupil estimate, fast head
//! turns tank the fit confidence. This example writes a small CSV with
//! both kinds of holes, parses it, and shows what repair does — short
//! gaps are interpolated, and the low-confidence run is filled too.

use affectus::ingest::{parse_tracker_csv, repair_missing, ColumnMapping};
use std::io::Write;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("P01.csv");

    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "head_yaw,pupil_diameter,confidence")?;
    for t in 0..40 {
        let yaw = (t as f64 * 0.1).sin();
        // Frames 10..13 lose the pupil; frames 25..28 lose tracker trust.
        let pupil = if (10..13).contains(&t) { "nan".to_string() } else { format!("{:.3}", 4.0 + yaw * 0.2) };
        let confidence = if (25..28).contains(&t) { 0.1 } else { 0.98 };
        writeln!(file, "{yaw:.4},{pupil},{confidence}")?;
    }
    drop(file);

    let mapping = ColumnMapping::canonical_subset(&["head_yaw", "pupil_diameter"]);
    let raw = parse_tracker_csv(&path, "P01", 25, &mapping)?;
    println!("parsed {} frames x {} channels", raw.n_frames(), raw.channels().len());

    let broken: Vec<usize> = raw
        .values("pupil_diameter")?
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_finite())
        .map(|(t, _)| t)
        .collect();
    println!("non-finite pupil frames before repair: {broken:?}");

    let repaired = repair_missing(&raw, 0.5)?;
    let pupil = repaired.values("pupil_diameter")?;
    assert!(pupil.iter().all(|v| v.is_finite()), "repair fills every hole");

    println!("\nframe  raw_pupil  repaired_pupil");
    let raw_pupil = raw.values("pupil_diameter")?;
    for (t, (r, p)) in raw_pupil.iter().zip(pupil.iter()).enumerate().take(16).skip(8) {
        println!("{t:>5}  {:>9}  {p:>14.4}", if r.is_finite() { format!("{r:.4}") } else { "nan".into() });
    }

    // The low-confidence run is rewritten even though its values parse.
    let yaw_raw = raw.values("head_yaw")?;
    let yaw_fixed = repaired.values("head_yaw")?;
    println!("\nlow-confidence frames 25..28 of head_yaw:");
    println!("  before: {:?}", yaw_raw[25..28].iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    println!("  after:  {:?}", yaw_fixed[25..28].iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    Ok(())
}
