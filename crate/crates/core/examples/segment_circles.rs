//! Segments the circles image on an adapted mesh and scores it against the known disks.
//!
//! ```text
//! cargo run --release --example segment_circles
//! ```

use amaseg::pipeline::fixtures::{circles_image, disk_mask};
use amaseg::pipeline::{dice, segment_one_level, MetricKind, RepresentParams, SegmentParams};

fn main() -> amaseg::Result<()> {
    let (grid, layout) = circles_image(256)?;
    let truth = disk_mask(256, 256, &layout);
    for kind in [MetricKind::Aniso, MetricKind::Dmp] {
        let params = SegmentParams {
            represent: RepresentParams {
                sd: 0.04,
                kind,
                ..RepresentParams::default()
            },
            ..SegmentParams::default()
        };
        let r = segment_one_level(&grid, &params)?;
        let c = r.constants();
        println!(
            "{kind:?}: {} vertices, {} iterations (converged {}), c1 {:.3} c2 {:.3}, dice {:.4}, {} contour pieces",
            r.mesh.num_vertices(),
            r.history.iterations(),
            r.history.converged,
            c.c1,
            c.c2,
            dice(&r.bright_mask(), &truth)?,
            r.contours.len(),
        );
    }
    Ok(())
}
