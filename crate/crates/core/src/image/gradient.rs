use nalgebra::{Point2, Vector2};

use super::{ImageError, ImageGray};

/// Central-difference gradient of the bilinearly interpolated image.
///
/// The rounded pixel must sit at least one pixel inside the border.
pub fn gradient_at(img: &ImageGray, pixel: &Point2<f64>) -> Result<Vector2<f64>, ImageError> {
    let (xr, yr) = (pixel.x.round(), pixel.y.round());
    if !(xr.is_finite() && yr.is_finite()) || !img.is_inside(xr as i64, yr as i64, 1) {
        return Err(ImageError::OutOfBounds {
            x: pixel.x,
            y: pixel.y,
            margin: 1,
        });
    }
    Ok(gradient_unchecked(img, pixel.x, pixel.y))
}

/// Same as [`gradient_at`] without the border check; samples are clamped.
#[inline]
pub fn gradient_unchecked(img: &ImageGray, x: f64, y: f64) -> Vector2<f64> {
    Vector2::new(
        (img.sample(x + 1.0, y) - img.sample(x - 1.0, y)) * 0.5,
        (img.sample(x, y + 1.0) - img.sample(x, y - 1.0)) * 0.5,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_and_constant() {
        let ramp = ImageGray::from_fn(16, 16, |x, _| x as u8);
        for p in [Point2::new(3.0, 4.0), Point2::new(7.3, 9.6)] {
            let g = gradient_at(&ramp, &p).unwrap();
            assert!((g - Vector2::new(1.0, 0.0)).norm() < 1e-12);
        }
        let flat = ImageGray::filled(16, 16, 90);
        assert_eq!(gradient_at(&flat, &Point2::new(5.0, 5.0)).unwrap(), Vector2::zeros());
    }

    #[test]
    fn border_is_rejected() {
        let img = ImageGray::filled(16, 16, 0);
        assert!(gradient_at(&img, &Point2::new(0.0, 5.0)).is_err());
        assert!(gradient_at(&img, &Point2::new(14.6, 5.0)).is_err());
        assert!(gradient_at(&img, &Point2::new(14.4, 5.0)).is_ok());
    }
}
