//! Versioned plain-text model files.
//!
//! ```text
//! meme-model 1
//! image <width> <height>
//! grid <rows> <cols>
//! patch <d> <alpha0> <alpha1>
//! k <K>
//! mixture worm
//! component <weight> mean <d² values> var <d² values>
//! ...
//! mixture cell <index>
//! ...
//! end
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file back
//! reproduces every parameter bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{AppearanceModel, CellGrid, PatchConfig};
use crate::error::{Error, Result};
use crate::mixture::{GaussianComponent, GaussianMixture};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "meme-model";

fn write_mixture(out: &mut String, header: &str, mix: &GaussianMixture) {
    let _ = writeln!(out, "mixture {header}");
    for c in mix.components() {
        let _ = write!(out, "component {} mean", c.weight);
        for m in &c.mean {
            let _ = write!(out, " {m}");
        }
        out.push_str(" var");
        for v in &c.variance {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
}

pub fn model_to_string(model: &AppearanceModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {MODEL_FORMAT_VERSION}");
    let _ = writeln!(out, "image {} {}", model.grid.width, model.grid.height);
    let _ = writeln!(out, "grid {} {}", model.grid.rows, model.grid.cols);
    let _ = writeln!(
        out,
        "patch {} {} {}",
        model.patch.d, model.patch.alpha0, model.patch.alpha1
    );
    let _ = writeln!(out, "k {}", model.k);
    write_mixture(&mut out, "worm", &model.worm);
    for (i, m) in model.background.iter().enumerate() {
        write_mixture(&mut out, &format!("cell {i}"), m);
    }
    out.push_str("end\n");
    out
}

pub fn write_model(model: &AppearanceModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let t: Vec<&str> = l.split_whitespace().collect();
            if !t.is_empty() && !t[0].starts_with('#') {
                return Ok(t);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            what: "model file",
            line: self.line,
            message: message.into(),
        }
    }

    fn expect(&mut self, keyword: &str, arity: usize) -> Result<Vec<&'a str>> {
        let t = self.next_tokens()?;
        if t[0] != keyword || t.len() != arity + 1 {
            return Err(self.err(format!("expected `{keyword}` with {arity} values")));
        }
        Ok(t[1..].to_vec())
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad number {s:?}")))
    }
}

fn read_mixture(lines: &mut Lines, header: &[&str], k: usize, dim: usize) -> Result<GaussianMixture> {
    let t = lines.next_tokens()?;
    if t.len() < 2 || t[0] != "mixture" || t[1..] != *header {
        return Err(lines.err(format!("expected `mixture {}`", header.join(" "))));
    }
    let mut comps = Vec::with_capacity(k);
    for _ in 0..k {
        let t = lines.next_tokens()?;
        if t.len() != 2 * dim + 4 || t[0] != "component" || t[2] != "mean" || t[3 + dim] != "var" {
            return Err(lines.err(format!("expected a component with {dim} means and variances")));
        }
        let weight = lines.num(t[1])?;
        let mean = t[3..3 + dim]
            .iter()
            .map(|s| lines.num(s))
            .collect::<Result<Vec<f64>>>()?;
        let variance = t[4 + dim..]
            .iter()
            .map(|s| lines.num(s))
            .collect::<Result<Vec<f64>>>()?;
        comps.push(GaussianComponent {
            weight,
            mean,
            variance,
        });
    }
    GaussianMixture::new(comps).map_err(|e| lines.err(e.to_string()))
}

pub fn model_from_str(text: &str) -> Result<AppearanceModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let head = lines.next_tokens()?;
    if head.len() != 2 || head[0] != MAGIC {
        return Err(lines.err("not a meme model file"));
    }
    let version: u32 = lines.num(head[1])?;
    if version != MODEL_FORMAT_VERSION {
        return Err(lines.err(format!("unsupported model version {version}")));
    }
    let image = lines.expect("image", 2)?;
    let (width, height) = (lines.num(image[0])?, lines.num(image[1])?);
    let g = lines.expect("grid", 2)?;
    let (rows, cols) = (lines.num(g[0])?, lines.num(g[1])?);
    let p = lines.expect("patch", 3)?;
    let patch = PatchConfig {
        d: lines.num(p[0])?,
        alpha0: lines.num(p[1])?,
        alpha1: lines.num(p[2])?,
    };
    let kv = lines.expect("k", 1)?;
    let k: usize = lines.num(kv[0])?;
    let grid = CellGrid::new(width, height, rows, cols).map_err(|e| lines.err(e.to_string()))?;
    let dim = patch.dim();
    let worm = read_mixture(&mut lines, &["worm"], k, dim)?;
    let mut background = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let idx = i.to_string();
        background.push(read_mixture(&mut lines, &["cell", &idx], k, dim)?);
    }
    if lines.next_tokens()? != ["end"] {
        return Err(lines.err("expected `end`"));
    }
    AppearanceModel::new(worm, background, grid, patch).map_err(|e| lines.err(e.to_string()))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<AppearanceModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mixture(weights: &[f64], dim: usize, base: f64) -> GaussianMixture {
        GaussianMixture::new(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| GaussianComponent {
                    weight: w,
                    mean: (0..dim).map(|j| base + i as f64 * 0.1 + j as f64 / 3.0).collect(),
                    variance: (0..dim).map(|j| 1.0 + (i + j) as f64 / 7.0).collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn truncated_file_rejected() {
        let grid = CellGrid::new(4, 4, 1, 2).unwrap();
        let m = AppearanceModel::new(
            mixture(&[0.25, 0.75], 1, 60.0),
            vec![mixture(&[0.5, 0.5], 1, 200.0); 2],
            grid,
            PatchConfig::fixed(1),
        )
        .unwrap();
        let text = model_to_string(&m);
        let cut: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(matches!(model_from_str(&cut), Err(Error::Parse { .. })));
        assert!(model_from_str(&text.replace("meme-model 1", "meme-model 9")).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(w in 0.001f64..0.999, base in -1e3f64..1e3, d in prop::sample::select(vec![1usize, 3])) {
            let grid = CellGrid::new(9, 7, 2, 3).unwrap();
            let patch = PatchConfig { d, alpha0: 1.0 / 3.0, alpha1: 100.0 };
            let cells = (0..6).map(|i| mixture(&[w, 1.0 - w], d * d, base + i as f64)).collect();
            let m = AppearanceModel::new(mixture(&[1.0 - w, w], d * d, -base), cells, grid, patch).unwrap();
            let back = model_from_str(&model_to_string(&m)).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(model_to_string(&back), model_to_string(&m));
        }
    }
}
