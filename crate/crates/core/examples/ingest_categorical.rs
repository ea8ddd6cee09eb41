//! One-hot encoding of a categorical table against a reference row, with
//! rare levels pooled into one indicator per column.
//!
//! cargo run --example ingest_categorical

use std::fs;

use pulasso::io::ingest_categorical;

fn main() -> pulasso::Result<()> {
    let dir = tempfile::tempdir()?;
    let file = dir.path().join("events.csv");
    let mut text = String::from("severity,component\n");
    for i in 0..300 {
        let severity = ["INFO", "WARN", "FATAL"][i % 3];
        let component = match i {
            0..=199 => "kernel",
            200..=289 => "network",
            _ => ["disk", "fan", "psu"][i % 3], // ten rows spread over rare levels
        };
        text += &format!("{severity},{component}\n");
    }
    fs::write(&file, text)?;

    let cat = ingest_categorical(&file, 0, Some(5.0))?;
    println!("{} rows -> {} indicator columns", cat.x.nrows(), cat.x.ncols());
    for s in &cat.map.sources {
        println!("source {:?}: reference {:?}", s.name, s.reference);
    }
    for c in &cat.map.columns {
        println!("  {:<20} levels {:?}", c.name, c.levels);
    }
    println!("groups (one per source column): {}", cat.groups.len());
    Ok(())
}
