//! Prints the two metric tensors at a few points of an image, with their eigenstructure.
//!
//! ```text
//! cargo run --release --example metric_tensors
//! ```

use amaseg::metric::{metric_aniso, metric_dmp, solve_alpha_elements};
use amaseg::pipeline::fixtures::circles_image;
use amaseg::tensor::Sym2;

fn show(name: &str, m: &Sym2) {
    let (lam, vecs) = m.eigen();
    println!(
        "  {name:6} [{:9.3e} {:9.3e}; {:9.3e}]  eigenvalues {:.3e} {:.3e}  major axis ({:.2}, {:.2})",
        m.xx, m.xy, m.yy, lam[0], lam[1], vecs[0][0], vecs[0][1]
    );
}

fn main() -> amaseg::Result<()> {
    let (grid, layout) = circles_image(256)?;
    let hessian = grid.hessian(2.0);
    let gradient = grid.gradient(2.0);
    let areas = vec![1.0; hessian.data.len()];
    let alpha = solve_alpha_elements(&hessian.data, &areas);
    println!("alpha over the pixel grid: {alpha:?}");
    let Some(a) = alpha.value() else { return Ok(()) };

    let c = &layout[0];
    let probes = [
        ("centre", [c.center[0], c.center[1]]),
        ("edge", [c.center[0] + c.radius, c.center[1]]),
        ("corner", [2.0, 2.0]),
    ];
    for (label, p) in probes {
        let (i, j) = (p[0].round() as usize, p[1].round() as usize);
        println!("{label} at ({i}, {j}), intensity {:.3}", grid.get(i, j));
        show("aniso", &metric_aniso(&hessian.get(i, j), a));
        show("dmp", &metric_dmp(gradient.get(i, j)));
    }
    Ok(())
}
