#![no_main]

use agentmesh_core::agents::sql::{validate_sql, BridgeDb, ROW_CAP};
use libfuzzer_sys::fuzz_target;
use std::sync::OnceLock;

const CSV: &str = "structure_number,state_name,year_built,bridge_age,average_daily_traffic
VA1,Virginia,1990,34,1200
VA2,Virginia,2019,5,300
MD1,Maryland,1950,74,9000
";

fn db() -> &'static (BridgeDb, String) {
    static DB: OnceLock<(BridgeDb, String)> = OnceLock::new();
    DB.get_or_init(|| {
        let db = BridgeDb::from_csv_reader(CSV.as_bytes()).unwrap();
        let hash = db.content_hash().unwrap();
        (db, hash)
    })
}

fuzz_target!(|text: &str| {
    if let Ok(v) = validate_sql(text) {
        let (db, hash) = db();
        if let Ok(t) = db.query(&v.statement, ROW_CAP) {
            assert!(t.rows.len() <= ROW_CAP);
        }
        assert_eq!(&db.content_hash().unwrap(), hash);
    }
});
