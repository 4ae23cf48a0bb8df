use std::collections::VecDeque;

use super::raster::BinaryMask;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

/// Labels connected regions. Label 0 is background; components are numbered
/// from 1 in the row-major order of their first pixel. Returns the label
/// raster and the pixel count of each component (index `label - 1`).
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.as_slice()[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        queue.push_back(start);
        let mut size = 0;
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let (x, y) = ((idx % w) as i64, (idx / w) as i64);
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if mask.as_slice()[n] && labels[n] == 0 {
                    labels[n] = label;
                    queue.push_back(n);
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Keeps only the largest connected region. Equal sizes resolve to the
/// component whose first pixel comes first in row-major order.
pub fn largest_component(mask: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    let (labels, sizes) = label_components(mask, connectivity);
    let (w, h) = mask.dims();
    let Some(best) = sizes
        .iter()
        .enumerate()
        // max_by_key returns the last maximum; reverse so the earliest label wins
        .rev()
        .max_by_key(|(_, &s)| s)
        .map(|(i, _)| i as u32 + 1)
    else {
        return BinaryMask::empty(w, h);
    };
    BinaryMask::new(w, h, labels.iter().map(|&l| l == best).collect())
        .expect("dimensions preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blob(mask: &mut BinaryMask, pts: &[(usize, usize)]) {
        for &(x, y) in pts {
            mask.set(x, y, true);
        }
    }

    /// Flood-fill-free oracle: repeatedly merge pixel sets that touch.
    fn brute_components(mask: &BinaryMask, conn: Connectivity) -> Vec<Vec<(usize, usize)>> {
        let touch = |a: (usize, usize), b: (usize, usize)| {
            let dx = (a.0 as i64 - b.0 as i64).abs();
            let dy = (a.1 as i64 - b.1 as i64).abs();
            match conn {
                Connectivity::Four => dx + dy == 1,
                Connectivity::Eight => dx.max(dy) == 1,
            }
        };
        let mut sets: Vec<Vec<(usize, usize)>> = mask.pixels().into_iter().map(|p| vec![p]).collect();
        loop {
            let mut merged = false;
            'outer: for i in 0..sets.len() {
                for j in i + 1..sets.len() {
                    if sets[i].iter().any(|&a| sets[j].iter().any(|&b| touch(a, b))) {
                        let other = sets.remove(j);
                        sets[i].extend(other);
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        sets
    }

    #[test]
    fn keeps_ten_pixel_blob() {
        let mut m = BinaryMask::empty(12, 8);
        blob(&mut m, &[(0, 0), (1, 0), (2, 0)]);
        let big: Vec<_> = (0..5).flat_map(|x| [(x + 5, 4), (x + 5, 5)]).collect();
        blob(&mut m, &big);
        let out = largest_component(&m, Connectivity::Eight);
        assert_eq!(out.count(), 10);
        assert_eq!(out.pixels(), {
            let mut b = big.clone();
            b.sort_by_key(|&(x, y)| (y, x));
            b
        });
    }

    #[test]
    fn empty_in_empty_out() {
        let m = BinaryMask::empty(5, 5);
        assert!(largest_component(&m, Connectivity::Four).is_empty());
    }

    #[test]
    fn tie_prefers_first_component() {
        let mut m = BinaryMask::empty(20, 5);
        blob(&mut m, &[(1, 2), (2, 2), (3, 2), (4, 2), (5, 2)]);
        blob(&mut m, &[(12, 1), (13, 1), (14, 1), (15, 1), (16, 1)]);
        let out = largest_component(&m, Connectivity::Eight);
        // the blob on row 1 starts first in row-major order
        assert_eq!(out.pixels()[0], (12, 1));
        assert_eq!(out.count(), 5);
    }

    #[test]
    fn diagonal_touch_depends_on_connectivity() {
        let mut m = BinaryMask::empty(4, 4);
        blob(&mut m, &[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(largest_component(&m, Connectivity::Eight).count(), 3);
        assert_eq!(largest_component(&m, Connectivity::Four).count(), 1);
    }

    fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
        (2usize..9, 2usize..9).prop_flat_map(|(w, h)| {
            proptest::collection::vec(proptest::bool::weighted(0.4), w * h)
                .prop_map(move |d| BinaryMask::new(w, h, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn labeling_matches_exhaustive_merge(m in mask_strategy(), four in any::<bool>()) {
            let conn = if four { Connectivity::Four } else { Connectivity::Eight };
            let (_, sizes) = label_components(&m, conn);
            let mut expected: Vec<usize> = brute_components(&m, conn).iter().map(Vec::len).collect();
            let mut got = sizes.clone();
            expected.sort_unstable();
            got.sort_unstable();
            prop_assert_eq!(got, expected);

            let out = largest_component(&m, conn);
            prop_assert!(out.is_subset_of(&m));
            prop_assert!(label_components(&out, conn).1.len() <= 1);
            prop_assert_eq!(out.count(), sizes.iter().copied().max().unwrap_or(0));
        }
    }
}
