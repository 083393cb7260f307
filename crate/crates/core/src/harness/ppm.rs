//! Plain-text PPM rendering of decision surfaces.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::toy::SurfaceRaster;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette {
    /// Colour of class `k`.
    pub classes: Vec<[u8; 3]>,
    /// Colour of cells whose score is exactly zero.
    pub tie: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            classes: vec![[49, 99, 179], [222, 125, 44], [87, 160, 81], [168, 72, 160]],
            tie: [255, 255, 255],
        }
    }
}

pub fn format_raster_ppm(raster: &SurfaceRaster, palette: &Palette) -> Result<String> {
    let r = raster.resolution;
    let mut out = format!("P3\n{r} {r}\n255\n");
    for row in 0..r {
        for col in 0..r {
            let class = raster.class_at(row, col);
            let [red, green, blue] = if raster.score_at(row, col) == 0.0 {
                palette.tie
            } else {
                *palette
                    .classes
                    .get(class)
                    .ok_or_else(|| Error::Raster(format!("class {class} has no colour")))?
            };
            let _ = writeln!(out, "{red} {green} {blue}");
        }
    }
    Ok(out)
}

/// One line per cell: `row,col,x,y,class,score`, rows top to bottom.
pub fn format_raster_scores(raster: &SurfaceRaster) -> String {
    let mut out = String::from("row,col,x,y,class,score\n");
    for row in 0..raster.resolution {
        for col in 0..raster.resolution {
            let [x, y] = raster.cell_center(row, col);
            let _ = writeln!(
                out,
                "{row},{col},{x:.16e},{y:.16e},{},{:.16e}",
                raster.class_at(row, col),
                raster.score_at(row, col)
            );
        }
    }
    out
}

/// The score file written next to `ppm`.
pub fn scores_path(ppm: &Path) -> PathBuf {
    ppm.with_extension("csv")
}

/// Writes `path` and its sibling score CSV.
pub fn write_raster_ppm(raster: &SurfaceRaster, path: &Path, palette: &Palette) -> Result<()> {
    let image = format_raster_ppm(raster, palette)?;
    std::fs::write(path, image)?;
    std::fs::write(scores_path(path), format_raster_scores(raster))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::{rasterize_surface, RasterBounds};

    fn single(class: usize, score: f64) -> SurfaceRaster {
        SurfaceRaster {
            bounds: RasterBounds::square(-1.0, 1.0),
            resolution: 1,
            classes: vec![class],
            scores: vec![score],
        }
    }

    #[test]
    fn one_white_pixel() {
        let palette = Palette {
            classes: vec![[255, 255, 255]],
            tie: [0, 0, 0],
        };
        let bytes = format_raster_ppm(&single(0, 1.0), &palette).unwrap();
        assert_eq!(bytes.as_bytes(), b"P3\n1 1\n255\n255 255 255\n");
    }

    #[test]
    fn unmapped_class_rejected() {
        let palette = Palette {
            classes: vec![[0, 0, 0]],
            tie: [1, 1, 1],
        };
        assert!(matches!(
            format_raster_ppm(&single(3, 1.0), &palette),
            Err(Error::Raster(_))
        ));
    }

    #[test]
    fn linear_three_by_three() {
        let raster = rasterize_surface(
            |p| {
                let s = p[0] + p[1];
                Ok((usize::from(s > 0.0), s))
            },
            RasterBounds::square(-1.0, 1.0),
            3,
        )
        .unwrap();
        let text = format_raster_ppm(&raster, &Palette::default()).unwrap();
        let pixels: Vec<&str> = text.lines().skip(3).collect();
        assert_eq!(pixels.len(), 9);
        let p = Palette::default();
        let colour = |c: [u8; 3]| format!("{} {} {}", c[0], c[1], c[2]);
        let (a, b, t) = (colour(p.classes[0]), colour(p.classes[1]), colour(p.tie));
        // top row is the largest y
        assert_eq!(pixels, vec![&t, &b, &b, &a, &t, &b, &a, &a, &t]);
    }
}
