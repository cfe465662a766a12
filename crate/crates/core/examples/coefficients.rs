//! Building coefficient sets from expressions, numbers and tables, and
//! checking them against the bound constant.
use slpart::coefficients::{CoefficientSet, CoefficientsConfig};

fn main() -> slpart::Result<()> {
    let cfg: CoefficientsConfig =
        serde_json::from_str(r#"{"p": "1 + 0.5 * x", "q": 0, "w": {"cells": [[0, 0.5, 4], [0.5, 1, 1]]}, "beta": 4}"#)?;
    let cs = cfg.build()?;
    let report = cs.validate();
    println!(
        "table config: passed = {}, s in [{:.4}, {:.4}]",
        report.passed(),
        report.s_min,
        report.s_max
    );
    println!(
        "knots {:?}, integral of s = {:.10}",
        cs.knots(),
        cs.integrate_s(0.0, 1.0, 1e-12)?
    );

    let bad = CoefficientSet::from_exprs("1", "-1 + x", "5", 4.0)?;
    let report = bad.validate();
    println!("bad config: passed = {}; {}", report.passed(), report.summary());
    match bad.ensure_valid() {
        Ok(()) => println!("unexpectedly valid"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
