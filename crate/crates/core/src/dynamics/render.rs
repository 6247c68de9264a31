use rayon::prelude::*;

use super::{DynamicsError, Escape, SchemaPolynomial};
use crate::scalar::{Real, C};
use crate::schema::Vertex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Real> Viewport<T> {
    /// The square `[−r, r]²` around `center`.
    pub fn square(center: C<T>, r: T) -> Self {
        Viewport { x_min: center.re - r, x_max: center.re + r, y_min: center.im - r, y_max: center.im + r }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|x| x.is_finite())
            && self.x_min < self.x_max
            && self.y_min < self.y_max;
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::Input("viewport must be a finite nondegenerate box".into()))
        }
    }
}

/// An RGB image with rows from top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
    /// Pixels still bounded after the whole budget.
    pub interior: usize,
}

impl Image {
    /// Binary PPM.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

fn palette(n: usize) -> [u8; 3] {
    let t = (n % 64) as u32;
    let ramp = |k: u32| -> u8 {
        let x = (t * 4 + k * 85) % 256;
        (if x < 128 { x * 2 } else { (255 - x) * 2 }) as u8
    };
    [ramp(0), ramp(1), ramp(2)]
}

/// Escape-time image of the fiber `v`.
pub fn render_julia<T: Real>(
    f: &SchemaPolynomial<T>,
    v: Vertex,
    view: &Viewport<T>,
    width: usize,
    height: usize,
    max_iter: usize,
) -> Result<Image, DynamicsError> {
    view.validate()?;
    if width == 0 || height == 0 {
        return Err(DynamicsError::Input("empty image".into()));
    }
    let radius = f.chain_escape_radius(v);
    let dx = (view.x_max - view.x_min) / T::lit(width as f64);
    let dy = (view.y_max - view.y_min) / T::lit(height as f64);
    let rows: Vec<(Vec<u8>, usize)> = (0..height)
        .into_par_iter()
        .map(|row| {
            let y = view.y_max - dy * (T::lit(row as f64) + T::lit(0.5));
            let mut line = Vec::with_capacity(width * 3);
            let mut inside = 0;
            for col in 0..width {
                let x = view.x_min + dx * (T::lit(col as f64) + T::lit(0.5));
                match f.escape_unchecked(v, C::new(x, y), max_iter, radius) {
                    Escape::Escaped { n, .. } => line.extend_from_slice(&palette(n)),
                    _ => {
                        inside += 1;
                        line.extend_from_slice(&[0, 0, 0]);
                    }
                }
            }
            (line, inside)
        })
        .collect();
    let interior = rows.iter().map(|r| r.1).sum();
    let rgb = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(Image { width, height, rgb, interior })
}
