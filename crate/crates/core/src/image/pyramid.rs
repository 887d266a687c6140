use super::ImageGray;

/// Image pyramid; level 0 is full resolution, each further level halves both
/// dimensions (rounding down) by 2x2 box averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    levels: Vec<ImageGray>,
}

impl Pyramid {
    /// Builds up to `levels` levels, stopping early once a dimension would drop below 1.
    pub fn build(img: &ImageGray, levels: usize) -> Self {
        let mut out = vec![img.clone()];
        while out.len() < levels.max(1) {
            let prev = out.last().expect("non-empty");
            let (w, h) = (prev.width() / 2, prev.height() / 2);
            if w == 0 || h == 0 {
                break;
            }
            out.push(ImageGray::from_fn(w, h, |x, y| {
                let (x0, y0) = (2 * x, 2 * y);
                let sum = u32::from(prev.get(x0, y0))
                    + u32::from(prev.get(x0 + 1, y0))
                    + u32::from(prev.get(x0, y0 + 1))
                    + u32::from(prev.get(x0 + 1, y0 + 1));
                ((sum + 2) / 4) as u8
            }));
        }
        Self { levels: out }
    }

    pub fn levels(&self) -> &[ImageGray] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &ImageGray {
        &self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn base(&self) -> &ImageGray {
        &self.levels[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn level_dimensions_halve_with_floor() {
        let pyr = Pyramid::build(&ImageGray::filled(37, 21, 5), 4);
        let dims: Vec<_> = pyr.levels().iter().map(|l| l.dimensions()).collect();
        assert_eq!(dims, vec![(37, 21), (18, 10), (9, 5), (4, 2)]);
    }

    #[test]
    fn stops_before_empty_levels() {
        let pyr = Pyramid::build(&ImageGray::filled(4, 4, 5), 8);
        assert_eq!(pyr.len(), 3);
    }

    #[test]
    fn mean_is_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (w, h) = (rng.random_range(64..200), rng.random_range(64..200));
            let img = ImageGray::from_fn(w, h, |_, _| rng.random());
            let pyr = Pyramid::build(&img, 4);
            for level in pyr.levels() {
                assert!((level.mean() - img.mean()).abs() <= 1.0);
            }
        }
    }
}
