//! Exact two-stage selection over a finite class of linear scorers, plus the
//! transfer-exponent diagnostic, from a JSON fixture.
//!
//! cargo run --example oracle_fixture -- [fixture.json]

use std::path::PathBuf;

use tlnp::oracle::OracleFixture;

fn main() -> tlnp::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/oracle_small.json"));
    let fixture = OracleFixture::load_json(&path)?;
    let report = fixture.solve()?;
    let s = &report.solution;
    let r = &report.risks;
    println!("class size {}", r.len());
    println!(
        "target-only solution #{}: type1 {:.4}, target {:.4}, source {:.4}",
        s.target_hat, r.type1[s.target_hat], r.target[s.target_hat], r.source[s.target_hat]
    );
    println!(
        "selected #{}: type1 {:.4} (cap {:.4}), target {:.4} (bound {:.4}), source {:.4}",
        s.selected, r.type1[s.selected], s.type1_cap, r.target[s.selected], s.target_bound, r.source[s.selected]
    );
    if let Some(e) = &report.exponent {
        println!(
            "transfer exponent rho = {} with c = {:.3} over {} members{}",
            e.rho,
            e.c,
            e.members_checked,
            if e.degenerate { " (degenerate)" } else { "" }
        );
    }
    Ok(())
}
