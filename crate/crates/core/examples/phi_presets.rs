//! Cost function families and their hypothesis checks.
use slpart::phi::{presets, ConvexFn, PhiConfig, Recession};

fn main() -> slpart::Result<()> {
    for p in presets() {
        println!("{:<14} {:<24} params {:?}", p.name, p.formula, p.params);
    }
    let square = ConvexFn::power(1.0)?;
    let heat = ConvexFn::heat();
    let from_json: PhiConfig = serde_json::from_str(r#"{"kind": "power_inverse", "r": 1}"#)?;
    let inverse = from_json.build()?;
    let custom = ConvexFn::custom("t^2 + t^4", 0.0, Recession::Infinite)?;
    for (name, f) in [
        ("power(1)", &square),
        ("heat", &heat),
        ("power_inverse(1)", &inverse),
        ("custom", &custom),
    ] {
        let vals: Vec<String> = [0.0, 0.5, 1.0, 2.0]
            .iter()
            .map(|&t| format!("{:.4}", f.eval_unchecked(t)))
            .collect();
        println!(
            "{name:<18} phi(0, .5, 1, 2) = [{}]  recession {:?}",
            vals.join(", "),
            f.recession()
        );
        for issue in f.check_hypotheses() {
            println!("    note: {issue}");
        }
    }
    Ok(())
}
