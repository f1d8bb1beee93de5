//! Regenerates `fixtures/bridge_basic_info.csv` deterministically.
//!
//! cargo run -p agentmesh-core --example generate_fixtures -- fixtures/bridge_basic_info.csv

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REFERENCE_YEAR: i64 = 2024;
const STATES: [(&str, &str, usize); 6] = [
    ("Virginia", "VA", 100),
    ("Maryland", "MD", 80),
    ("Ohio", "OH", 80),
    ("Texas", "TX", 80),
    ("California", "CA", 80),
    ("Pennsylvania", "PA", 80),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures/bridge_basic_info.csv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(0x00b1_d9e5);
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record([
        "structure_number",
        "state_name",
        "year_built",
        "bridge_age",
        "average_daily_traffic",
    ])?;
    let mut serial = 1000u32;
    for (state, code, n) in STATES {
        for i in 0..n {
            serial += rng.gen_range(1..40);
            let mut year: i64 = rng.gen_range(1900..=2023);
            // log-uniform traffic between 50 and ~180k vehicles/day
            let mut adt = (50f64 * (rng.gen::<f64>() * 8.2).exp()).round() as i64;
            if code == "VA" {
                // a handful of guaranteed rows for the 2019 and high-traffic questions
                if i < 4 {
                    year = 2019;
                }
                if (4..7).contains(&i) {
                    adt = rng.gen_range(200_001..260_000);
                }
                if year == 2019 && i >= 4 {
                    year = 2018;
                }
            }
            w.write_record([
                format!("{code}{serial:07}"),
                state.to_string(),
                year.to_string(),
                (REFERENCE_YEAR - year).to_string(),
                adt.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
