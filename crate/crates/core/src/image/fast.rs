use super::{ImageError, ImageGray};

/// Radius-3 Bresenham circle, clockwise from the top.
pub const CIRCLE_OFFSETS: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Indices into [`CIRCLE_OFFSETS`] of the four axis-aligned circle pixels.
const AXIS_INDICES: [usize; 4] = [0, 4, 8, 12];

const ARC_LEN: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FastResult {
    pub is_corner: bool,
    /// Largest contrast that holds over an entire 9-pixel arc: the maximum over
    /// arcs of the minimum absolute difference to the centre. The pixel is a
    /// FAST-9 corner at threshold `t` iff `score > t`.
    pub score: i32,
}

fn check_border(img: &ImageGray, x: i64, y: i64) -> Result<(), ImageError> {
    if img.is_inside(x, y, 3) {
        Ok(())
    } else {
        Err(ImageError::OutOfBounds {
            x: x as f64,
            y: y as f64,
            margin: 3,
        })
    }
}

fn circle_diffs(img: &ImageGray, x: u32, y: u32) -> [i32; 16] {
    let centre = i32::from(img.get(x, y));
    let mut diffs = [0i32; 16];
    for (d, (dx, dy)) in diffs.iter_mut().zip(CIRCLE_OFFSETS) {
        let px = (x as i32 + dx) as u32;
        let py = (y as i32 + dy) as u32;
        *d = i32::from(img.get(px, py)) - centre;
    }
    diffs
}

/// Threshold-free FAST-9 score of an interior pixel (see [`FastResult::score`]).
pub fn fast9_score(img: &ImageGray, x: i64, y: i64) -> Result<i32, ImageError> {
    check_border(img, x, y)?;
    let diffs = circle_diffs(img, x as u32, y as u32);
    let mut best = 0i32;
    for start in 0..16 {
        let mut min_bright = i32::MAX;
        let mut min_dark = i32::MAX;
        for k in 0..ARC_LEN {
            let d = diffs[(start + k) % 16];
            min_bright = min_bright.min(d);
            min_dark = min_dark.min(-d);
        }
        best = best.max(min_bright).max(min_dark);
    }
    Ok(best)
}

/// FAST-9 segment test: at least 9 contiguous circle pixels all brighter than
/// `centre + threshold` or all darker than `centre - threshold`.
pub fn is_fast9_corner(img: &ImageGray, x: i64, y: i64, threshold: u8) -> Result<FastResult, ImageError> {
    let score = fast9_score(img, x, y)?;
    Ok(FastResult {
        is_corner: score > i32::from(threshold),
        score,
    })
}

/// Four-point pre-test on the axis-aligned circle pixels: passes when at least
/// three of them differ from the centre by more than `threshold`, in either
/// direction.
pub fn fast12_pretest(img: &ImageGray, x: i64, y: i64, threshold: u8) -> Result<bool, ImageError> {
    check_border(img, x, y)?;
    let centre = i32::from(img.get(x as u32, y as u32));
    let t = i32::from(threshold);
    let passing = AXIS_INDICES
        .iter()
        .filter(|&&i| {
            let (dx, dy) = CIRCLE_OFFSETS[i];
            let v = i32::from(img.get((x as i32 + dx) as u32, (y as i32 + dy) as u32));
            (v - centre).abs() > t
        })
        .count();
    Ok(passing >= 3)
}
