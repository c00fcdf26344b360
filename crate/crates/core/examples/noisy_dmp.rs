//! Segments a noisy image with the gradient-based (DMP) metric and prints the iteration history.
//!
//! ```text
//! cargo run --release --example noisy_dmp [noise_sigma] [seed]
//! ```

use amaseg::pipeline::fixtures::{add_noise, circles_image, disk_mask};
use amaseg::pipeline::{dice, segment_one_level, MetricKind, RepresentParams, SegmentParams};

fn main() -> amaseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let (clean, layout) = circles_image(512)?;
    let noisy = add_noise(&clean, sigma, seed)?;
    let params = SegmentParams {
        represent: RepresentParams {
            sd: 0.01,
            kind: MetricKind::Dmp,
            ..RepresentParams::default()
        },
        ..SegmentParams::default()
    };
    let r = segment_one_level(&noisy, &params)?;
    for rec in r.history.records.iter().step_by(10) {
        println!(
            "it {:3}  c1 {:.4}  c2 {:.4}  energy {:.4e}  sign changes {:.2e}",
            rec.iteration, rec.c1, rec.c2, rec.energy, rec.sign_change_fraction
        );
    }
    println!(
        "{} iterations (converged {}), dice {:.4}",
        r.history.iterations(),
        r.history.converged,
        dice(&r.bright_mask(), &disk_mask(512, 512, &layout))?
    );
    Ok(())
}
