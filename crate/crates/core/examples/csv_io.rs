//! Loading samples with custom column names and writing them back.
//!
//! `cargo run --release --example csv_io`

use asf_bounds::model::{read_stated_csv, write_csv};
use asf_bounds::CsvSchema;

fn main() -> asf_bounds::Result<()> {
    let raw = "health,wave,prob_a,prob_b\n1,0,0.2,0.7\n0,1,0.9,0.1\n1,1,0.5,0.5\n";
    let schema = CsvSchema {
        x: "health".into(),
        z: Some("wave".into()),
        require_z: true,
        p: Some(vec!["prob_a".into(), "prob_b".into()]),
        ..CsvSchema::default()
    };
    let stated = read_stated_csv(raw.as_bytes(), &schema)?;
    println!("{}", serde_json::to_string_pretty(&stated.validation_report())?);
    write_csv(&stated, std::io::stdout())?;
    Ok(())
}
