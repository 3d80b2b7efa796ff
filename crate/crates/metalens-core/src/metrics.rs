//! Image quality metrics and CSV reporting.

use std::io::Write;
use std::path::Path;

use crate::color::color_average;
use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR is capped here (dB) to keep identical-image comparisons finite.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Mean squared difference over all samples, accumulated in f64.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Shape("mse: images differ in shape".into()));
    }
    let mut acc = 0.0f64;
    for (&x, &y) in a.samples().iter().zip(b.samples()) {
        let d = x as f64 - y as f64;
        acc += d * d;
    }
    Ok(acc / a.samples().len() as f64)
}

/// Peak signal-to-noise ratio in dB against `peak = 1`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    psnr_with_peak(a, b, 1.0)
}

/// `10 * log10(peak^2 / mse)`, capped at 99 dB once
/// `mse < peak^2 * 10^-9.9`.
pub fn psnr_with_peak(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    let e = mse(a, b)?;
    let floor = peak * peak * 10f64.powf(-PSNR_CAP_DB / 10.0);
    if e < floor {
        return Ok(PSNR_CAP_DB);
    }
    Ok(10.0 * (peak * peak / e).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), peak 1,
/// averaged over window positions fully inside the image. Color images
/// are reduced to the channel average first.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Shape("ssim: images differ in shape".into()));
    }
    let (ga, gb);
    let (pa, pb) = if a.channels() == 3 {
        ga = color_average(a)?;
        gb = color_average(b)?;
        (&ga, &gb)
    } else if a.channels() == 1 {
        (a, b)
    } else {
        return Err(Error::Shape(format!(
            "ssim expects 1 or 3 channels, got {}",
            a.channels()
        )));
    };
    let (w, h) = (pa.width(), pa.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Size(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, image is {w}x{h}"
        )));
    }

    // normalized 2D Gaussian window
    let mut win = [0.0f64; SSIM_WINDOW * SSIM_WINDOW];
    let c = (SSIM_WINDOW - 1) as f64 / 2.0;
    let mut sum = 0.0;
    for y in 0..SSIM_WINDOW {
        for x in 0..SSIM_WINDOW {
            let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2);
            let v = (-d2 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            win[y * SSIM_WINDOW + x] = v;
            sum += v;
        }
    }
    for v in &mut win {
        *v /= sum;
    }

    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let plane_a = pa.plane(0);
    let plane_b = pb.plane(0);
    let mut total = 0.0f64;
    let mut count = 0usize;
    for oy in 0..=h - SSIM_WINDOW {
        for ox in 0..=w - SSIM_WINDOW {
            let (mut mx, mut my) = (0.0f64, 0.0f64);
            let (mut sxx, mut syy, mut sxy) = (0.0f64, 0.0f64, 0.0f64);
            for wy in 0..SSIM_WINDOW {
                let row = (oy + wy) * w + ox;
                for wx in 0..SSIM_WINDOW {
                    let wt = win[wy * SSIM_WINDOW + wx];
                    let x = plane_a[row + wx] as f64;
                    let y = plane_b[row + wx] as f64;
                    mx += wt * x;
                    my += wt * y;
                    sxx += wt * x * x;
                    syy += wt * y * y;
                    sxy += wt * x * y;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cov = sxy - mx * my;
            let s = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += s;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// One evaluation row of the quality report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub name: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub mse: f64,
}

/// Writes rows as CSV: header `name,psnr_db,ssim,mse`, six decimal
/// places, LF line endings.
pub fn write_report<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    out.write_all(b"name,psnr_db,ssim,mse\n")?;
    for row in rows {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            row.name, row.psnr_db, row.ssim, row.mse
        )?;
    }
    Ok(())
}

pub fn report(rows: &[ReportRow], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_report(rows, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_image(w: usize, h: usize, c: usize, seed: u64) -> Image {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Image::from_fn(w, h, c, |_, _, _| rng.random::<f32>())
    }

    #[test]
    fn mse_of_identical_is_zero() {
        let a = random_image(8, 8, 3, 1);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mse_of_constant_offset() {
        let a = random_image(8, 8, 1, 2);
        let b = a.map(|v| v + 0.1);
        assert!((mse(&a, &b).unwrap() - 0.01).abs() < 1e-7);
    }

    #[test]
    fn mse_matches_naive_oracle() {
        let a = random_image(13, 7, 3, 3);
        let b = random_image(13, 7, 3, 4);
        let got = mse(&a, &b).unwrap();
        let mut acc = 0.0f64;
        let mut n = 0usize;
        for c in 0..3 {
            for i in 0..13 * 7 {
                let d = a.plane(c)[i] as f64 - b.plane(c)[i] as f64;
                acc += d * d;
                n += 1;
            }
        }
        let want = acc / n as f64;
        assert!((got - want).abs() / want < 1e-12);
    }

    #[test]
    fn psnr_fixed_points() {
        let a = Image::zeros(4, 4, 1);
        let b = a.map(|_| 0.1);
        // mse = 0.01 -> 20 dB
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-4);
        let c = a.map(|_| 1.0);
        // mse = 1 -> 0 dB
        assert!(psnr(&a, &c).unwrap().abs() < 1e-9);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn psnr_symmetric_and_monotone() {
        let a = random_image(8, 8, 1, 5);
        let b = random_image(8, 8, 1, 6);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        let mut last = f64::INFINITY;
        for scale in [0.01f32, 0.05, 0.1, 0.4] {
            let shifted = a.map(|v| v + scale);
            let p = psnr(&a, &shifted).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn ssim_of_identical_is_one() {
        let a = random_image(24, 20, 1, 7);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        let c = Image::from_fn(16, 16, 1, |_, _, _| 0.5);
        assert!((ssim(&c, &c).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ssim_of_inverted_contrast_is_low() {
        // mid-gray-varying image against its negative
        let a = Image::from_fn(32, 32, 1, |x, y, _| {
            0.5 + 0.4 * ((x as f32 * 0.6).sin() * (y as f32 * 0.45).cos())
        });
        let b = a.map(|v| 1.0 - v);
        let s = ssim(&a, &b).unwrap();
        assert!(s < 0.1, "ssim {s}");
    }

    #[test]
    fn ssim_symmetric() {
        let a = random_image(20, 16, 3, 8);
        let b = random_image(20, 16, 3, 9);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = Image::zeros(8, 8, 1);
        assert!(matches!(ssim(&a, &a), Err(Error::Size(_))));
    }

    #[test]
    fn report_format_fixture() {
        let rows = vec![ReportRow {
            name: "ours".into(),
            psnr_db: 22.5997,
            ssim: 0.9,
            mse: 0.0055,
        }];
        let mut buf = Vec::new();
        write_report(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "name,psnr_db,ssim,mse\nours,22.599700,0.900000,0.005500\n"
        );
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_report(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "name,psnr_db,ssim,mse\n");
    }

    #[test]
    fn report_roundtrip_parses_back() {
        let rows = vec![
            ReportRow {
                name: "a".into(),
                psnr_db: 31.415926,
                ssim: 0.876543,
                mse: 0.000721,
            },
            ReportRow {
                name: "b".into(),
                psnr_db: 12.3,
                ssim: 0.5,
                mse: 0.058882,
            },
        ];
        let mut buf = Vec::new();
        write_report(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, row) in text.lines().skip(1).zip(&rows) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[0], row.name);
            assert!((fields[1].parse::<f64>().unwrap() - row.psnr_db).abs() < 1e-6);
            assert!((fields[2].parse::<f64>().unwrap() - row.ssim).abs() < 1e-6);
            assert!((fields[3].parse::<f64>().unwrap() - row.mse).abs() < 1e-6);
        }
    }
}
