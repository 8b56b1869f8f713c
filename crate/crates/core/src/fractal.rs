//! Box-counting dimension of region borders in a stability grid.
//!
//! Box sizes are edge lengths in cells. The estimator uses power-of-two sizes
//! from 1 up to a quarter of the shorter grid side, and drops that largest
//! octave from the fit because counts saturate there.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::AttractorLabel;
use crate::error::{Error, Result};
use crate::sweep::StabilityGrid;

/// A set of labels treated as one region.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub unstable: bool,
    pub zero_stable: bool,
    pub pi_stable: bool,
    pub unclassified: bool,
    pub all_cycles: bool,
    /// Specific cycle orders, in addition to `all_cycles`.
    pub cycles: Vec<u32>,
}

impl LabelSet {
    pub fn contains(&self, l: &AttractorLabel) -> bool {
        match l {
            AttractorLabel::Unstable => self.unstable,
            AttractorLabel::ZeroStable => self.zero_stable,
            AttractorLabel::PiStable => self.pi_stable,
            AttractorLabel::Unclassified => self.unclassified,
            AttractorLabel::NCycle(c) => self.all_cycles || self.cycles.contains(&c.n),
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.unstable || self.zero_stable || self.pi_stable || self.unclassified || self.all_cycles) && self.cycles.is_empty()
    }
}

impl FromStr for LabelSet {
    type Err = Error;

    /// Comma-separated names: `unstable`, `zero`, `pi`, `unclassified`,
    /// `all-cycles`, or `<n>-cycle`.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = LabelSet::default();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item {
                "unstable" => set.unstable = true,
                "zero" | "zero-stable" => set.zero_stable = true,
                "pi" | "pi-stable" => set.pi_stable = true,
                "unclassified" => set.unclassified = true,
                "all-cycles" | "cycles" | "limit-cycles" => set.all_cycles = true,
                other => {
                    let n = other
                        .strip_suffix("-cycle")
                        .and_then(|n| n.parse::<u32>().ok())
                        .filter(|&n| n > 0)
                        .ok_or_else(|| Error::Format(format!("unknown label {other:?}")))?;
                    set.cycles.push(n);
                }
            }
        }
        if set.is_empty() {
            return Err(Error::Format("empty label set".into()));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BorderMask {
    pub width: usize,
    pub height: usize,
    /// Row-major, same layout as the source grid.
    pub cells: Vec<bool>,
}

impl BorderMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let cells = (0..width * height).map(|i| f(i % width, i / width)).collect();
        Self { width, height, cells }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// Cells inside `labels` with a 4-neighbour outside it. The grid edge is not
/// an interface.
pub fn extract_border(grid: &StabilityGrid, labels: &LabelSet) -> BorderMask {
    let (w, h) = (grid.width(), grid.height());
    let inside: Vec<bool> = grid.labels.iter().map(|l| labels.contains(l)).collect();
    let at = |x: usize, y: usize| inside[y * w + x];
    BorderMask::from_fn(w, h, |x, y| {
        at(x, y)
            && ((x > 0 && !at(x - 1, y))
                || (x + 1 < w && !at(x + 1, y))
                || (y > 0 && !at(x, y - 1))
                || (y + 1 < h && !at(x, y + 1)))
    })
}

/// Powers of two from 1 up to `min(width, height) / 4`.
pub fn default_sizes(width: usize, height: usize) -> Vec<usize> {
    let limit = width.min(height) as f64 / 4.0;
    std::iter::successors(Some(1usize), |r| Some(r * 2)).take_while(|&r| r as f64 <= limit).collect()
}

/// Number of `r`×`r` boxes, anchored at the origin, holding a border cell.
pub fn box_count(mask: &BorderMask, sizes: &[usize]) -> Result<Vec<(usize, usize)>> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    sizes
        .iter()
        .map(|&r| {
            if r == 0 {
                return Err(Error::InvalidParameter("box size 0".into()));
            }
            let bw = mask.width.div_ceil(r);
            let mut hit = vec![false; bw * mask.height.div_ceil(r)];
            for (i, _) in mask.cells.iter().enumerate().filter(|(_, &c)| c) {
                let (x, y) = (i % mask.width, i / mask.width);
                hit[(y / r) * bw + x / r] = true;
            }
            Ok((r, hit.iter().filter(|&&h| h).count()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(r, N_b)` pairs entering the fit.
    pub pairs: Vec<(f64, f64)>,
}

/// Least-squares line through `(ln 1/r, ln N_b)`.
pub fn fit_dimension(pairs: &[(f64, f64)]) -> Result<DimensionEstimate> {
    if pairs.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} points, need at least 4", pairs.len())));
    }
    if pairs.iter().any(|&(r, n)| !(r > 0.0 && n > 0.0 && r.is_finite() && n.is_finite())) {
        return Err(Error::DegenerateFit("sizes and counts must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|&(r, n)| (-r.ln(), n.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 1e-12 * (1.0 + mx * mx)) {
        return Err(Error::DegenerateFit("box sizes do not vary".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(DimensionEstimate { slope, intercept: my - slope * mx, r_squared, pairs: pairs.to_vec() })
}

/// Counts at every default size and the fit over all but the largest octave.
pub fn estimate_dimension(mask: &BorderMask) -> Result<(Vec<(usize, usize)>, DimensionEstimate)> {
    estimate_dimension_with(mask, &default_sizes(mask.width, mask.height))
}

/// Counts at `sizes`, fitting only the sizes below `min(width, height) / 4`.
pub fn estimate_dimension_with(mask: &BorderMask, sizes: &[usize]) -> Result<(Vec<(usize, usize)>, DimensionEstimate)> {
    let counts = box_count(mask, sizes)?;
    let limit = mask.width.min(mask.height) as f64 / 4.0;
    let fit: Vec<(f64, f64)> =
        counts.iter().filter(|&&(r, _)| (r as f64) < limit).map(|&(r, n)| (r as f64, n as f64)).collect();
    Ok((counts, fit_dimension(&fit)?))
}

/// CSV of `r,n_b,log_inv_r,log_n_b,in_fit`.
pub fn counts_csv(counts: &[(usize, usize)], est: &DimensionEstimate) -> String {
    let mut out = String::from("r,n_b,log_inv_r,log_n_b,in_fit\n");
    for &(r, n) in counts {
        let used = est.pairs.iter().any(|&(fr, _)| fr == r as f64);
        let _ = writeln!(out, "{r},{n},{:.9e},{:.9e},{}", -(r as f64).ln(), (n as f64).ln(), u8::from(used));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRecord {
    pub labels: LabelSet,
    pub border_cells: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Box sizes are edge lengths, not radii.
    pub size_convention: String,
    pub pairs: Vec<(f64, f64)>,
}

impl DimensionRecord {
    pub fn new(labels: LabelSet, mask: &BorderMask, est: &DimensionEstimate) -> Self {
        Self {
            labels,
            border_cells: mask.count(),
            slope: est.slope,
            intercept: est.intercept,
            r_squared: est.r_squared,
            size_convention: "edge".into(),
            pairs: est.pairs.clone(),
        }
    }
}

/// Sierpinski carpet after `depth` removal steps, one cell per finest square.
pub fn sierpinski_carpet(depth: u32) -> BorderMask {
    let side = 3usize.pow(depth);
    BorderMask::from_fn(side, side, |mut x, mut y| {
        while x > 0 || y > 0 {
            if x % 3 == 1 && y % 3 == 1 {
                return false;
            }
            x /= 3;
            y /= 3;
        }
        true
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{GridSpec, Provenance};

    fn grid(w: usize, h: usize, f: impl Fn(usize, usize) -> AttractorLabel) -> StabilityGrid {
        StabilityGrid {
            spec: GridSpec::desk_stability(w, h),
            labels: (0..w * h).map(|i| f(i % w, i / w)).collect(),
            bisection_level: 0,
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn label_set_parsing() {
        let s: LabelSet = "unstable, 3-cycle".parse().unwrap();
        assert!(s.unstable && s.cycles == vec![3] && !s.all_cycles);
        assert!("all-cycles".parse::<LabelSet>().unwrap().all_cycles);
        assert!("".parse::<LabelSet>().is_err());
        assert!("0-cycle".parse::<LabelSet>().is_err());
        assert!("bogus".parse::<LabelSet>().is_err());
    }

    #[test]
    fn vertical_interface_gives_line() {
        let g = grid(8, 6, |x, _| if x < 4 { AttractorLabel::ZeroStable } else { AttractorLabel::Unstable });
        let m = extract_border(&g, &"zero".parse().unwrap());
        assert_eq!(m, BorderMask::from_fn(8, 6, |x, _| x == 3));
        let m = extract_border(&g, &"unstable".parse().unwrap());
        assert_eq!(m, BorderMask::from_fn(8, 6, |x, _| x == 4));
    }

    #[test]
    fn uniform_and_absent_sets_are_empty() {
        let g = grid(5, 5, |_, _| AttractorLabel::ZeroStable);
        assert!(extract_border(&g, &"zero".parse().unwrap()).is_empty());
        assert!(extract_border(&g, &"unstable".parse().unwrap()).is_empty());
        assert!(matches!(box_count(&BorderMask::new(4, 4), &[1]), Err(Error::EmptyMask)));
    }

    #[test]
    fn sizes() {
        assert_eq!(default_sizes(128, 256), vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(default_sizes(729, 729), vec![1, 2, 4, 8, 16, 32, 64, 128]);
        assert_eq!(default_sizes(3, 3), Vec::<usize>::new());
    }

    #[test]
    fn straight_line_dimension_one() {
        let m = BorderMask::from_fn(256, 256, |x, _| x == 100);
        let (_, est) = estimate_dimension(&m).unwrap();
        assert!((est.slope - 1.0).abs() < 0.05, "{}", est.slope);
    }

    #[test]
    fn filled_mask_counts_and_dimension_two() {
        let m = BorderMask::from_fn(100, 70, |_, _| true);
        let counts = box_count(&m, &[1, 2, 4, 8, 16]).unwrap();
        for (r, n) in counts {
            assert_eq!(n, 100usize.div_ceil(r) * 70usize.div_ceil(r));
        }
        let (_, est) = estimate_dimension(&BorderMask::from_fn(256, 256, |_, _| true)).unwrap();
        assert!((est.slope - 2.0).abs() < 0.05, "{}", est.slope);
    }

    #[test]
    fn carpet_dimension() {
        let exact = 8f64.ln() / 3f64.ln();
        let m = sierpinski_carpet(5);
        assert_eq!(m.width, 243);
        assert_eq!(m.count(), 8usize.pow(5));
        let (counts, est) = estimate_dimension_with(&m, &[1, 3, 9, 27, 81]).unwrap();
        assert_eq!(counts.last(), Some(&(81, 8)));
        assert_eq!(est.pairs.len(), 4);
        assert!((est.slope - exact).abs() < 1e-12, "{} vs {exact}", est.slope);

        // Power-of-two boxes straddle the ternary structure and read low.
        let (_, est) = estimate_dimension(&sierpinski_carpet(6)).unwrap();
        assert!((est.slope - exact).abs() < 0.05, "{} vs {exact}", est.slope);
    }

    #[test]
    fn exact_power_law() {
        let pairs: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&r: &f64| (r, 7.0 * r.powf(-1.5))).collect();
        let est = fit_dimension(&pairs).unwrap();
        assert!((est.slope - 1.5).abs() < 1e-12);
        assert!((est.intercept - 7f64.ln()).abs() < 1e-12);
        assert!((est.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fits() {
        assert!(fit_dimension(&[(1.0, 5.0); 3]).is_err());
        assert!(fit_dimension(&[(2.0, 5.0); 5]).is_err());
        assert!(fit_dimension(&[(1.0, 0.0), (2.0, 1.0), (4.0, 1.0), (8.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_marks_fit_rows() {
        let m = BorderMask::from_fn(64, 64, |x, y| x == y);
        let (counts, est) = estimate_dimension(&m).unwrap();
        let csv = counts_csv(&counts, &est);
        assert!(csv.starts_with("r,n_b,log_inv_r,log_n_b,in_fit\n1,64,"));
        assert!(csv.trim_end().ends_with(",0"));
        assert_eq!(csv.lines().count(), counts.len() + 1);
    }
}
