//! Minimal PNG line plots: framed axes and one coloured polyline per curve,
//! without labels.

use std::path::Path;

use image::{Rgb, RgbImage};

const WIDTH: u32 = 640;
const HEIGHT: u32 = 480;
const MARGIN: u32 = 40;
const COLORS: [[u8; 3]; 4] = [[31, 119, 180], [214, 39, 40], [44, 160, 44], [148, 103, 189]];

fn draw_line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Plots `curves` of `(x, y)` points; `log` uses logarithmic axes and drops
/// non-positive points.
pub fn line_plot(path: &Path, curves: &[Vec<(f64, f64)>], log: bool) -> Result<(), String> {
    let tf = |v: f64| if log { v.log10() } else { v };
    let pts: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| {
            c.iter()
                .filter(|(x, y)| !log || (*x > 0.0 && *y > 0.0))
                .map(|&(x, y)| (tf(x), tf(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect()
        })
        .collect();
    let all: Vec<&(f64, f64)> = pts.iter().flatten().collect();
    if all.is_empty() {
        return Err("nothing to plot".into());
    }
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(|p| f(p)).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(|p| f(p)).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (xlo, xhi) = bounds(|p| p.0);
    let (ylo, yhi) = bounds(|p| p.1);
    let (w, h) = ((WIDTH - 2 * MARGIN) as f64, (HEIGHT - 2 * MARGIN) as f64);
    let px = |(x, y): (f64, f64)| {
        (
            MARGIN as i64 + ((x - xlo) / (xhi - xlo) * w).round() as i64,
            (HEIGHT - MARGIN) as i64 - ((y - ylo) / (yhi - ylo) * h).round() as i64,
        )
    };
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    let black = Rgb([0, 0, 0]);
    let (l, r, t, b) = (
        MARGIN as i64,
        (WIDTH - MARGIN) as i64,
        MARGIN as i64,
        (HEIGHT - MARGIN) as i64,
    );
    for (p, q) in [((l, t), (r, t)), ((r, t), (r, b)), ((r, b), (l, b)), ((l, b), (l, t))] {
        draw_line(&mut img, p, q, black);
    }
    for (k, curve) in pts.iter().enumerate() {
        let color = Rgb(COLORS[k % COLORS.len()]);
        for seg in curve.windows(2) {
            draw_line(&mut img, px(seg[0]), px(seg[1]), color);
        }
    }
    img.save(path).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_png() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        line_plot(&p, &[vec![(10.0, 1e-2), (20.0, 2.5e-3)]], true).unwrap();
        assert!(p.exists());
        assert!(line_plot(&p, &[vec![]], false).is_err());
    }
}
