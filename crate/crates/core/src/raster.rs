//! Grayscale rasters: loading, saving, sampling and finite-difference derivatives.
//!
//! Pixel `(i, j)` sits at the point `(x, y) = (i, j)`, so an image of
//! `width × height` pixels covers the rectangle `[0, width-1] × [0, height-1]`.
//! Intensities are normalized to `[0, 1]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Point, Sym2};

/// Values that can be blended linearly for bilinear sampling.
pub trait Blend: Copy {
    fn blend(a: Self, b: Self, t: f64) -> Self;
}

impl Blend for f64 {
    #[inline]
    fn blend(a: f64, b: f64, t: f64) -> f64 {
        a + (b - a) * t
    }
}

impl Blend for [f64; 2] {
    #[inline]
    fn blend(a: Self, b: Self, t: f64) -> Self {
        [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
    }
}

impl Blend for Sym2 {
    #[inline]
    fn blend(a: Self, b: Self, t: f64) -> Self {
        Sym2::new(
            a.xx + (b.xx - a.xx) * t,
            a.xy + (b.xy - a.xy) * t,
            a.yy + (b.yy - a.yy) * t,
        )
    }
}

/// Row-major per-pixel data of any kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                data.push(f(i, j));
            }
        }
        Raster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.width + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.width + i] = v;
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T: Blend> Raster<T> {
    /// Bilinear interpolation; points outside the rectangle are projected onto it.
    pub fn sample(&self, p: Point) -> T {
        let x = p[0].clamp(0.0, (self.width - 1) as f64);
        let y = p[1].clamp(0.0, (self.height - 1) as f64);
        let i0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let j0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        let i1 = (i0 + 1).min(self.width - 1);
        let j1 = (j0 + 1).min(self.height - 1);
        let tx = x - i0 as f64;
        let ty = y - j0 as f64;
        let top = T::blend(self.get(i0, j0), self.get(i1, j0), tx);
        let bottom = T::blend(self.get(i0, j1), self.get(i1, j1), tx);
        T::blend(top, bottom, ty)
    }
}

pub type ScalarField = Raster<f64>;
pub type VectorField = Raster<[f64; 2]>;
pub type TensorField = Raster<Sym2>;

/// A grayscale image with intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelGrid {
    raster: Raster<f64>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::DegenerateImage { width, height });
        }
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(PixelGrid {
            raster: Raster {
                width,
                height,
                data: values,
            },
        })
    }

    /// Builds a grid from a closure; results are clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let raster = Raster::from_fn(width, height, f).map(|v| v.clamp(0.0, 1.0));
        PixelGrid::new(width, height, raster.data)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        PixelGrid::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.raster.width
    }

    pub fn height(&self) -> usize {
        self.raster.height
    }

    pub fn values(&self) -> &[f64] {
        &self.raster.data
    }

    pub fn raster(&self) -> &Raster<f64> {
        &self.raster
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.raster.get(i, j)
    }

    /// Extent of the image domain, `(width-1, height-1)`.
    pub fn extent(&self) -> (f64, f64) {
        ((self.width() - 1) as f64, (self.height() - 1) as f64)
    }

    pub fn sample_bilinear(&self, p: Point) -> f64 {
        self.raster.sample(p)
    }

    pub fn mean(&self) -> f64 {
        self.values().iter().sum::<f64>() / self.values().len() as f64
    }

    pub fn gradient(&self, presmooth_sigma: f64) -> VectorField {
        grid_gradient(self, presmooth_sigma)
    }

    pub fn hessian(&self, presmooth_sigma: f64) -> TensorField {
        grid_hessian(self, presmooth_sigma)
    }
}

/// Samples `grid` at a point in pixel coordinates.
pub fn sample_bilinear(grid: &PixelGrid, point: Point) -> f64 {
    grid.sample_bilinear(point)
}

// ---------------------------------------------------------------------------
// Derivatives

/// Separable Gaussian blur truncated at 3σ with half-sample reflection at the border.
pub fn gaussian_blur(src: &Raster<f64>, sigma: f64) -> Raster<f64> {
    if sigma <= 0.0 {
        return src.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let reflect = |i: isize, n: usize| -> usize {
        let n = n as isize;
        let mut i = i;
        // repeated reflection handles kernels wider than the image
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - i - 1;
            } else {
                return i as usize;
            }
        }
    };

    let (w, h) = (src.width, src.height);
    let mut tmp = Raster::filled(w, h, 0.0);
    for j in 0..h {
        for i in 0..w {
            let mut acc = 0.0;
            for (k, wk) in kernel.iter().enumerate() {
                let ii = reflect(i as isize + k as isize - radius, w);
                acc += wk * src.get(ii, j);
            }
            tmp.set(i, j, acc);
        }
    }
    let mut out = Raster::filled(w, h, 0.0);
    for j in 0..h {
        for i in 0..w {
            let mut acc = 0.0;
            for (k, wk) in kernel.iter().enumerate() {
                let jj = reflect(j as isize + k as isize - radius, h);
                acc += wk * tmp.get(i, jj);
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// First derivative along a line of samples: central inside, second-order one-sided at the ends.
fn diff1(v: &[f64], out: &mut [f64]) {
    let n = v.len();
    if n == 2 {
        out[0] = v[1] - v[0];
        out[1] = out[0];
        return;
    }
    out[0] = 0.5 * (-3.0 * v[0] + 4.0 * v[1] - v[2]);
    for k in 1..n - 1 {
        out[k] = 0.5 * (v[k + 1] - v[k - 1]);
    }
    out[n - 1] = 0.5 * (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]);
}

/// Second derivative along a line of samples.
fn diff2(v: &[f64], out: &mut [f64]) {
    let n = v.len();
    match n {
        2 => {
            out[0] = 0.0;
            out[1] = 0.0;
            return;
        }
        3 => {
            let d = v[0] - 2.0 * v[1] + v[2];
            out.iter_mut().for_each(|o| *o = d);
            return;
        }
        _ => {}
    }
    out[0] = 2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3];
    for k in 1..n - 1 {
        out[k] = v[k + 1] - 2.0 * v[k] + v[k - 1];
    }
    out[n - 1] = 2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4];
}

fn along_x(src: &Raster<f64>, op: fn(&[f64], &mut [f64])) -> Raster<f64> {
    let (w, h) = (src.width, src.height);
    let mut out = Raster::filled(w, h, 0.0);
    let mut buf = vec![0.0; w];
    for j in 0..h {
        op(&src.data[j * w..(j + 1) * w], &mut buf);
        out.data[j * w..(j + 1) * w].copy_from_slice(&buf);
    }
    out
}

fn along_y(src: &Raster<f64>, op: fn(&[f64], &mut [f64])) -> Raster<f64> {
    let (w, h) = (src.width, src.height);
    let mut out = Raster::filled(w, h, 0.0);
    let mut col = vec![0.0; h];
    let mut buf = vec![0.0; h];
    for i in 0..w {
        for j in 0..h {
            col[j] = src.get(i, j);
        }
        op(&col, &mut buf);
        for j in 0..h {
            out.set(i, j, buf[j]);
        }
    }
    out
}

/// Per-pixel gradient in intensity per pixel.
pub fn grid_gradient(grid: &PixelGrid, presmooth_sigma: f64) -> VectorField {
    let f = gaussian_blur(grid.raster(), presmooth_sigma);
    let gx = along_x(&f, diff1);
    let gy = along_y(&f, diff1);
    Raster {
        width: f.width,
        height: f.height,
        data: gx.data.iter().zip(&gy.data).map(|(&a, &b)| [a, b]).collect(),
    }
}

/// Per-pixel Hessian; the mixed term is the average of both differentiation orders.
pub fn grid_hessian(grid: &PixelGrid, presmooth_sigma: f64) -> TensorField {
    let f = gaussian_blur(grid.raster(), presmooth_sigma);
    let fxx = along_x(&f, diff2);
    let fyy = along_y(&f, diff2);
    let fxy = along_y(&along_x(&f, diff1), diff1);
    let fyx = along_x(&along_y(&f, diff1), diff1);
    let data = (0..f.data.len())
        .map(|k| Sym2::new(fxx.data[k], 0.5 * (fxy.data[k] + fyx.data[k]), fyy.data[k]))
        .collect();
    Raster {
        width: f.width,
        height: f.height,
        data,
    }
}

// ---------------------------------------------------------------------------
// File I/O

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmEncoding {
    /// `P2`
    Ascii,
    /// `P5`
    Binary,
}

/// Loads a PGM (`P2`/`P5`, 8 or 16 bit) or PNG image, normalized to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<PixelGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<PixelGrid> {
    match bytes {
        [b'P', b'2', ..] | [b'P', b'5', ..] => decode_pgm(bytes),
        [0x89, b'P', b'N', b'G', ..] => decode_png(bytes),
        _ => Err(Error::UnsupportedFormat(
            "expected a P2/P5 PGM or PNG file".into(),
        )),
    }
}

struct PgmHeader {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    let binary = bytes[1] == b'5';
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&c) = bytes.get(pos) {
                        pos += 1;
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(Error::Malformed("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|c| c.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Malformed("non-numeric PGM header field".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed("PGM header field overflow".into()))?;
    }
    // exactly one whitespace byte separates the header from binary data
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(Error::Malformed("missing whitespace after PGM header".into()));
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Malformed(format!("PGM maxval {maxval} out of range")));
    }
    Ok(PgmHeader {
        binary,
        width: width as usize,
        height: height as usize,
        maxval: maxval as u32,
        data_start: pos + 1,
    })
}

fn decode_pgm(bytes: &[u8]) -> Result<PixelGrid> {
    let h = parse_pgm_header(bytes)?;
    if h.width < 2 || h.height < 2 {
        return Err(Error::DegenerateImage {
            width: h.width,
            height: h.height,
        });
    }
    let n = h.width * h.height;
    let maxval = h.maxval as f64;
    let raw: Vec<u32> = if h.binary {
        let body = &bytes[h.data_start..];
        if h.maxval < 256 {
            if body.len() < n {
                return Err(Error::Malformed("truncated PGM raster".into()));
            }
            body[..n].iter().map(|&b| b as u32).collect()
        } else {
            if body.len() < 2 * n {
                return Err(Error::Malformed("truncated PGM raster".into()));
            }
            body[..2 * n]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
                .collect()
        }
    } else {
        let text = std::str::from_utf8(&bytes[h.data_start..])
            .map_err(|_| Error::Malformed("non-ASCII data in P2 raster".into()))?;
        let vals: std::result::Result<Vec<u32>, _> =
            text.split_ascii_whitespace().take(n).map(str::parse).collect();
        let vals = vals.map_err(|_| Error::Malformed("bad sample in P2 raster".into()))?;
        if vals.len() < n {
            return Err(Error::Malformed("truncated PGM raster".into()));
        }
        vals
    };
    if let Some(v) = raw.iter().find(|&&v| v > h.maxval) {
        return Err(Error::Malformed(format!("sample {v} exceeds maxval {}", h.maxval)));
    }
    PixelGrid::new(h.width, h.height, raw.iter().map(|&v| v as f64 / maxval).collect())
}

fn decode_png(bytes: &[u8]) -> Result<PixelGrid> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Malformed(e.to_string()))?;
    // luminance conversion happens before rescaling to [0, 1]
    let luma = img.to_luma16();
    let (w, h) = luma.dimensions();
    let (w, h) = (w as usize, h as usize);
    if w < 2 || h < 2 {
        return Err(Error::DegenerateImage { width: w, height: h });
    }
    PixelGrid::new(
        w,
        h,
        luma.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
    )
}

/// Encodes values in `[0, 1]` (clamped) as an 8-bit PGM.
pub fn encode_pgm(width: usize, height: usize, values: &[f64], encoding: PgmEncoding) -> Vec<u8> {
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    match encoding {
        PgmEncoding::Binary => {
            let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
            out.extend(values.iter().map(|&v| quantize(v)));
            out
        }
        PgmEncoding::Ascii => {
            let mut out = format!("P2\n{width} {height}\n255\n");
            for row in values.chunks(width) {
                let line: Vec<String> = row.iter().map(|&v| quantize(v).to_string()).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

pub fn save_pgm(grid: &PixelGrid, path: impl AsRef<Path>, encoding: PgmEncoding) -> Result<()> {
    write_atomic(
        path.as_ref(),
        &encode_pgm(grid.width(), grid.height(), grid.values(), encoding),
    )
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
