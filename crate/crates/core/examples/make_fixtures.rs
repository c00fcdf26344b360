//! Regenerates the synthetic test images in `fixtures/`.
//!
//! ```text
//! cargo run --release --example make_fixtures [output_dir]
//! ```

use std::path::PathBuf;

use amaseg::pipeline::fixtures::{add_noise, blobs_image, circles_image, disk_mask, rings_image, two_objects_image};
use amaseg::raster::{save_pgm, PgmEncoding, PixelGrid};

fn mask_grid(m: &amaseg::pipeline::Mask) -> amaseg::Result<PixelGrid> {
    PixelGrid::from_fn(m.width, m.height, |i, j| if m.get(i, j) { 1.0 } else { 0.0 })
}

fn main() -> amaseg::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&dir).map_err(|e| amaseg::Error::Io { path: dir.clone(), source: e })?;
    let save = |name: &str, g: &PixelGrid| {
        let p = dir.join(name);
        println!("{}", p.display());
        save_pgm(g, p, PgmEncoding::Binary)
    };

    let (circles, layout) = circles_image(256)?;
    save("circles_256.pgm", &circles)?;
    save("circles_256_mask.pgm", &mask_grid(&disk_mask(256, 256, &layout))?)?;

    let (clean, layout) = circles_image(512)?;
    save("noisy_circles_512.pgm", &add_noise(&clean, 0.2, 7)?)?;
    save("noisy_circles_512_mask.pgm", &mask_grid(&disk_mask(512, 512, &layout))?)?;

    save("rings_512.pgm", &rings_image(512)?.0)?;
    save("two_objects_256.pgm", &two_objects_image(256)?.0)?;

    let (blobs, mask) = blobs_image(256)?;
    save("blobs_256.pgm", &blobs)?;
    save("blobs_256_mask.pgm", &mask_grid(&mask)?)?;
    Ok(())
}
