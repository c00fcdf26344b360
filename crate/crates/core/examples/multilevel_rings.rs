//! Three-level segmentation of concentric rings; writes per-level outputs.
//!
//! ```text
//! cargo run --release --example multilevel_rings [output_prefix]
//! ```

use amaseg::pipeline::fixtures::rings_image;
use amaseg::pipeline::output::{write_level_outputs, LevelOutputs};
use amaseg::pipeline::{segment_multilevel, MultilevelParams, RepresentParams, SegmentParams};

fn main() -> amaseg::Result<()> {
    let prefix = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("amaseg_rings").to_string_lossy().into_owned());
    let (grid, _) = rings_image(512)?;
    let ml = MultilevelParams {
        levels: 3,
        ..MultilevelParams::default()
    };
    let params = SegmentParams {
        represent: RepresentParams {
            sd: 0.01,
            ..RepresentParams::default()
        },
        ..SegmentParams::default()
    };
    let r = segment_multilevel(&grid, &ml, &params)?;
    println!("{} final labels", r.num_labels);
    for level in 1..=ml.levels {
        for b in r.level(level) {
            let iters = b.result.as_ref().map_or(0, |res| res.history.iterations());
            println!("level {level} branch {}: {:?}, {iters} iterations", b.index, b.status);
        }
        let Some((segmented, phi)) = r.composite(level) else { continue };
        let solved: Vec<_> = r.level(level).filter_map(|b| b.result.as_ref().map(|res| (b.index, res))).collect();
        let out = LevelOutputs {
            level,
            image: &grid,
            segmented: &segmented,
            phi: &phi,
            contours: solved.iter().flat_map(|(i, res)| res.contours.iter().map(move |c| (*i, c))).collect(),
            meshes: solved.iter().map(|(i, res)| (*i, &res.mesh)).collect(),
            histories: solved.iter().map(|(i, res)| (*i, &res.history)).collect(),
        };
        for path in write_level_outputs(&prefix, &out, false)? {
            println!("  {}", path.display());
        }
    }
    Ok(())
}
