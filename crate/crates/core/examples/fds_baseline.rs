//! Runs the pixel-grid finite difference solver and compares it with the mesh solver.
//!
//! ```text
//! cargo run --release --example fds_baseline [dt]
//! ```

use amaseg::chanvese::ModelParams;
use amaseg::fds::fds_run;
use amaseg::fem::SolverParams;
use amaseg::pipeline::fixtures::{circles_image, disk_mask};
use amaseg::pipeline::{dice, segment_one_level, sign_mask, RepresentParams, SegmentParams};

fn main() -> amaseg::Result<()> {
    let dt = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000.0);
    let (grid, layout) = circles_image(256)?;
    let truth = disk_mask(256, 256, &layout);
    let model = ModelParams::default();
    let solver = SolverParams {
        dt,
        max_iters: 500,
        ..SolverParams::default()
    };

    let (phi, history) = fds_run(&grid, &model, &solver)?;
    let c = history.constants;
    let inside = sign_mask(&phi);
    let bright = if c.c1 >= c.c2 { inside } else { inside.map(|b| !b) };
    println!(
        "fds dt={dt}: {} iterations (converged {}), dice {:.4}",
        history.iterations(),
        history.converged,
        dice(&bright, &truth)?
    );

    let params = SegmentParams {
        represent: RepresentParams {
            sd: 0.04,
            ..RepresentParams::default()
        },
        model,
        solver,
    };
    let ama = segment_one_level(&grid, &params)?;
    println!(
        "ama sd=0.04: {} iterations (converged {}), dice {:.4}, agreement with fds {:.4}",
        ama.history.iterations(),
        ama.history.converged,
        dice(&ama.bright_mask(), &truth)?,
        dice(&ama.bright_mask(), &bright)?
    );
    Ok(())
}
