//! Binary PPM (P6) images of stability grids and phase portraits.

use crate::classifier::AttractorLabel;
use crate::dynamics::Trajectory;
use crate::sweep::StabilityGrid;

pub type Rgb = [u8; 3];

pub const UNSTABLE: Rgb = [0, 0, 0];
pub const ZERO_STABLE: Rgb = [16, 32, 112];
pub const PI_STABLE: Rgb = [64, 112, 208];
pub const UNCLASSIFIED: Rgb = [128, 128, 128];

/// Colours for n-cycles; order `n` uses entry `(n - 1) % 16`.
pub const CYCLE_PALETTE: [Rgb; 16] = [
    [230, 25, 75],
    [255, 225, 25],
    [60, 180, 75],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
    [255, 215, 180],
];

pub fn label_color(l: &AttractorLabel) -> Rgb {
    match l {
        AttractorLabel::Unstable => UNSTABLE,
        AttractorLabel::ZeroStable => ZERO_STABLE,
        AttractorLabel::PiStable => PI_STABLE,
        AttractorLabel::Unclassified => UNCLASSIFIED,
        AttractorLabel::NCycle(c) => CYCLE_PALETTE[(c.n.max(1) as usize - 1) % 16],
    }
}

/// Encode `pixels` (row-major, top row first) as P6.
pub fn encode_ppm(width: usize, height: usize, pixels: &[Rgb]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(3 * pixels.len());
    for p in pixels {
        out.extend_from_slice(p);
    }
    out
}

/// Decode a P6 image written by [`encode_ppm`].
pub fn decode_ppm(data: &[u8]) -> Option<(usize, usize, Vec<Rgb>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while data.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while !data.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&data[start..pos]).ok()?);
    }
    pos += 1;
    if fields[0] != "P6" || fields[3] != "255" {
        return None;
    }
    let (w, h): (usize, usize) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
    let body = data.get(pos..pos + 3 * w * h)?;
    Some((w, h, body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()))
}

/// One pixel per cell, `x` to the right and `y` increasing upward.
pub fn render_grid(grid: &StabilityGrid) -> Vec<u8> {
    let (w, h) = (grid.width(), grid.height());
    let pixels: Vec<Rgb> = (0..w * h).map(|i| label_color(grid.get(i % w, h - 1 - i / w))).collect();
    encode_ppm(w, h, &pixels)
}

/// Scatter of `(φ, φ')` samples scaled to fill a `size`×`size` image.
pub fn render_portrait(traj: &Trajectory, size: usize) -> Vec<u8> {
    let size = size.max(8);
    let mut pixels = vec![[255u8; 3]; size * size];
    let bounds = |it: &mut dyn Iterator<Item = f64>| it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (p0, p1) = bounds(&mut traj.phases());
    let (v0, v1) = bounds(&mut traj.velocities());
    let margin = 2usize;
    let span = (size - 1 - 2 * margin) as f64;
    let scale = |v: f64, lo: f64, hi: f64| {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        margin + (t * span).round() as usize
    };
    for s in &traj.samples {
        let px = scale(s.phi, p0, p1);
        let py = size - 1 - scale(s.v, v0, v1);
        pixels[py * size + px] = [0, 0, 0];
    }
    encode_ppm(size, size, &pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Center, CycleInfo};
    use crate::dynamics::{DynParams, PhaseState};
    use crate::sweep::{GridSpec, Provenance};

    #[test]
    fn palette_is_distinct() {
        let mut all = vec![UNSTABLE, ZERO_STABLE, PI_STABLE, UNCLASSIFIED];
        all.extend(CYCLE_PALETTE);
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn cycle_colours_wrap() {
        let c = |n| AttractorLabel::NCycle(CycleInfo { n, turning: n, winding: 1, center: Center::Pi, period: 1.0 });
        assert_eq!(label_color(&c(1)), CYCLE_PALETTE[0]);
        assert_eq!(label_color(&c(17)), CYCLE_PALETTE[0]);
        assert_eq!(label_color(&c(16)), CYCLE_PALETTE[15]);
    }

    #[test]
    fn grid_orientation_and_round_trip() {
        let spec = GridSpec::desk_stability(2, 2);
        let g = StabilityGrid {
            spec,
            labels: vec![AttractorLabel::Unstable, AttractorLabel::ZeroStable, AttractorLabel::PiStable, AttractorLabel::Unclassified],
            bisection_level: 0,
            provenance: Provenance::default(),
        };
        let img = render_grid(&g);
        assert!(img.starts_with(b"P6\n2 2\n255\n"));
        let (w, h, px) = decode_ppm(&img).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(px, vec![PI_STABLE, UNCLASSIFIED, UNSTABLE, ZERO_STABLE]);
    }

    #[test]
    fn portrait_marks_samples() {
        let traj = Trajectory {
            tau0: 0.0,
            dtau: 0.1,
            samples: (0..100).map(|k| PhaseState::new((k as f64 * 0.1).sin(), (k as f64 * 0.1).cos())).collect(),
            params: DynParams::new(0.0, 0.0),
        };
        let (w, h, px) = decode_ppm(&render_portrait(&traj, 64)).unwrap();
        assert_eq!((w, h), (64, 64));
        let dark = px.iter().filter(|p| **p == [0, 0, 0]).count();
        assert!(dark > 20 && dark <= 100);
    }
}
