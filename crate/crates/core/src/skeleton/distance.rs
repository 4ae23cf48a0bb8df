use crate::imagecore::BinaryMask;

/// Per-pixel distance `D` to the nearest worm boundary pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Zero outside the raster.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.values[y as usize * self.width + x as usize]
        }
    }

    pub(crate) fn set(&mut self, x: usize, y: usize, value: f64) {
        self.values[y * self.width + x] = value;
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Worm pixels that touch a non-worm pixel or the image edge (8-neighbourhood).
pub fn boundary_pixels(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        if !mask.get(x, y) {
            return false;
        }
        let (x, y) = (x as i64, y as i64);
        (-1..=1).any(|dy| (-1..=1).any(|dx| !mask.get_signed(x + dx, y + dy)))
    })
}

const INF: i64 = i64::MAX / 4;

/// Lower envelope of parabolas: `out[p] = min_q (p - q)² + f[q]`.
fn edt_1d(f: &[i64], out: &mut [i64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    let mut first = None;
    for (q, &fq) in f.iter().enumerate() {
        if fq < INF {
            first = Some(q);
            break;
        }
    }
    let Some(q0) = first else {
        out.iter_mut().for_each(|o| *o = INF);
        return;
    };
    v.push(q0);
    z.push(f64::NEG_INFINITY);
    for q in q0 + 1..n {
        if f[q] >= INF {
            continue;
        }
        loop {
            let p = *v.last().expect("envelope never empties");
            let num = (f[q] + (q * q) as i64) - (f[p] + (p * p) as i64);
            let s = num as f64 / (2.0 * (q as f64 - p as f64));
            if s <= *z.last().expect("paired with v") {
                v.pop();
                z.pop();
                if v.is_empty() {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < p as f64 {
            k += 1;
        }
        let d = p as i64 - v[k] as i64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance from every worm pixel to its closest boundary pixel,
/// computed separably (columns, then rows). Boundary and background pixels are 0.
pub fn chamfer_transform(mask: &BinaryMask) -> DistanceField {
    let (w, h) = mask.dims();
    let boundary = boundary_pixels(mask);
    let mut sq: Vec<i64> = boundary.as_slice().iter().map(|&b| if b { 0 } else { INF }).collect();
    let (mut v, mut z) = (Vec::new(), Vec::new());

    let mut col = vec![0i64; h];
    let mut col_out = vec![0i64; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = sq[y * w + x];
        }
        edt_1d(&col, &mut col_out, &mut v, &mut z);
        for y in 0..h {
            sq[y * w + x] = col_out[y];
        }
    }
    let mut row_out = vec![0i64; w];
    for y in 0..h {
        edt_1d(&sq[y * w..(y + 1) * w], &mut row_out, &mut v, &mut z);
        sq[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }

    let values = mask
        .as_slice()
        .iter()
        .zip(&sq)
        .map(|(&inside, &d2)| if inside && d2 < INF { (d2 as f64).sqrt() } else { 0.0 })
        .collect();
    DistanceField {
        width: w,
        height: h,
        values,
    }
}
