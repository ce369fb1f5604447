//! Decide whether one method beats another from paired per-image score
//! differences, using a normal-approximation confidence interval on the
//! mean difference.
//!
//! The verdict protocol: compute the interval at the chosen level and check
//! whether zero lies inside. Outside means the improvement is systematic at
//! that level; inside means the data cannot distinguish the methods.

use fisheye_lab::metrics::paired_diff_ci;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Per-image PSNR differences (method A minus method B), three scenarios.
    let clearly_better: Vec<f64> = (0..40).map(|i| 0.8 + 0.01 * (i % 7) as f64).collect();
    let noisy_wash: Vec<f64> = (0..40)
        .map(|i| if i % 2 == 0 { 0.5 } else { -0.5 } + 0.001 * i as f64)
        .collect();
    let clearly_worse: Vec<f64> = (0..40).map(|i| -1.2 - 0.02 * (i % 5) as f64).collect();

    for (name, diffs) in [
        ("consistent gain", &clearly_better),
        ("no separation", &noisy_wash),
        ("consistent loss", &clearly_worse),
    ] {
        let ci = paired_diff_ci(diffs, 0.95)?;
        let verdict = if ci.contains_zero() {
            "zero inside: no significant difference"
        } else if ci.mean > 0.0 {
            "zero outside: significant improvement"
        } else {
            "zero outside: significant regression"
        };
        println!(
            "{name:<16} mean {:+.4}, 95% interval [{:+.4}, {:+.4}]  ->  {verdict}",
            ci.mean, ci.lower, ci.upper
        );
    }
    Ok(())
}
