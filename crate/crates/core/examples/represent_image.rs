//! Builds an adapted mesh for an image and reports how well the mesh follows the metric.
//!
//! ```text
//! cargo run --release --example represent_image [image] [sd]
//! ```

use amaseg::mesh::{equidistribution_ratios, mesh_to_svg};
use amaseg::pipeline::fixtures::circles_image;
use amaseg::pipeline::{ama_represent, MetricKind, RepresentParams};
use amaseg::raster::{load_image, write_atomic};

fn main() -> amaseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let grid = match args.next() {
        Some(path) => load_image(path)?,
        None => circles_image(256)?.0,
    };
    let sd = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.01);

    for kind in [MetricKind::Aniso, MetricKind::Dmp] {
        let params = RepresentParams {
            sd,
            kind,
            ..RepresentParams::default()
        };
        let rep = ama_represent(&grid, &params)?;
        let mesh = rep.mesh();
        let ratios = equidistribution_ratios(mesh, &rep.adapt.metric);
        let worst = ratios.iter().cloned().fold(0.0, f64::max);
        println!(
            "{kind:?}: {} vertices (target {}), {} triangles, alpha {:?}, max equidistribution ratio {worst:.2}, {:.2?}",
            mesh.num_vertices(),
            params.target_vertices(grid.width(), grid.height()),
            mesh.num_triangles(),
            rep.alpha.and_then(|a| a.value()),
            rep.elapsed,
        );
        let path = std::env::temp_dir().join(format!("amaseg_{kind:?}_mesh.svg").to_lowercase());
        write_atomic(&path, mesh_to_svg(mesh).as_bytes())?;
        println!("  mesh written to {}", path.display());
    }
    Ok(())
}
