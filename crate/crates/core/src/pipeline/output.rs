//! Result files: images, contour tables, mesh drawings and iteration logs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::reconstruct::Polyline;
use crate::error::Result;
use crate::fem::History;
use crate::mesh::{mesh_to_svg, TriMesh};
use crate::raster::{encode_pgm, write_atomic, PgmEncoding, PixelGrid, ScalarField};

/// Affine map of a level-set raster onto `[0, 1]` with zero at mid-gray.
pub fn phi_display(phi: &ScalarField) -> Vec<f64> {
    let m = phi.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return vec![0.5; phi.data.len()];
    }
    phi.data.iter().map(|v| 0.5 + 0.5 * v / m).collect()
}

/// The image dimmed, with contour points burned in white.
pub fn overlay(grid: &PixelGrid, contours: &[&Polyline]) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    let mut out: Vec<f64> = grid.values().iter().map(|v| 0.8 * v).collect();
    let mut plot = |p: [f64; 2]| {
        let (i, j) = (p[0].round(), p[1].round());
        if i >= 0.0 && j >= 0.0 && (i as usize) < w && (j as usize) < h {
            out[j as usize * w + i as usize] = 1.0;
        }
    };
    for line in contours {
        let n = line.points.len();
        let segs = if line.closed { n } else { n.saturating_sub(1) };
        for s in 0..segs {
            let (a, b) = (line.points[s], line.points[(s + 1) % n]);
            let steps = (4.0 * (b[0] - a[0]).hypot(b[1] - a[1])).ceil().max(1.0) as usize;
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                plot([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        if n == 1 {
            plot(line.points[0]);
        }
    }
    out
}

/// One row per contour point, tagged with branch and polyline index.
pub fn contours_csv(contours: &[(usize, &Polyline)]) -> String {
    let mut s = String::from("branch,polyline,closed,point,x,y\n");
    for (idx, (branch, line)) in contours.iter().enumerate() {
        for (k, p) in line.points.iter().enumerate() {
            let _ = writeln!(s, "{branch},{idx},{},{k},{:.6},{:.6}", line.closed as u8, p[0], p[1]);
        }
    }
    s
}

/// Iteration logs of several branches in one table.
pub fn history_csv(histories: &[(usize, &History)]) -> String {
    let mut s = String::from("branch,iteration,c1,c2,energy,sign_change_fraction,linear_iterations\n");
    for (branch, h) in histories {
        for r in &h.records {
            let _ = writeln!(
                s,
                "{branch},{},{:.10e},{:.10e},{:.10e},{:.6e},{}",
                r.iteration, r.c1, r.c2, r.energy, r.sign_change_fraction, r.linear_iterations
            );
        }
    }
    s
}

/// Everything produced for one level.
pub struct LevelOutputs<'a> {
    pub level: usize,
    pub image: &'a PixelGrid,
    pub segmented: &'a PixelGrid,
    pub phi: &'a ScalarField,
    pub contours: Vec<(usize, &'a Polyline)>,
    pub meshes: Vec<(usize, &'a TriMesh)>,
    pub histories: Vec<(usize, &'a History)>,
}

pub fn level_path(prefix: &str, level: usize, what: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}_l{level}_{what}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// Writes segmented, level-set and overlay images, the contour table, mesh drawings
/// and, with `log`, the iteration history. Returns the written paths.
pub fn write_level_outputs(prefix: &str, out: &LevelOutputs, log: bool) -> Result<Vec<PathBuf>> {
    let (w, h) = (out.image.width(), out.image.height());
    let mut files = Vec::new();
    let mut put = |what: &str, bytes: Vec<u8>| -> Result<()> {
        let p = level_path(prefix, out.level, what);
        write_atomic(&p, &bytes)?;
        files.push(p);
        Ok(())
    };
    put("segmented.pgm", encode_pgm(w, h, out.segmented.values(), PgmEncoding::Binary))?;
    put("phi.pgm", encode_pgm(w, h, &phi_display(out.phi), PgmEncoding::Binary))?;
    let lines: Vec<&Polyline> = out.contours.iter().map(|(_, l)| *l).collect();
    put("overlay.pgm", encode_pgm(w, h, &overlay(out.image, &lines), PgmEncoding::Binary))?;
    put("contours.csv", contours_csv(&out.contours).into_bytes())?;
    if out.meshes.len() == 1 {
        put("mesh.svg", mesh_to_svg(out.meshes[0].1).into_bytes())?;
    } else {
        for (b, m) in &out.meshes {
            put(&format!("mesh_b{b}.svg"), mesh_to_svg(m).into_bytes())?;
        }
    }
    if log {
        let p = level_path(prefix, out.level, "history.csv");
        write_text(&p, &history_csv(&out.histories))?;
        files.push(p);
    }
    Ok(files)
}
