use serde::{Deserialize, Serialize};

/// Axis-aligned pixel rectangle with inclusive corners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    /// Returns `None` unless `x0 <= x1` and `y0 <= y1`.
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Option<Self> {
        (x0 <= x1 && y0 <= y1).then_some(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0 + 1
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        bboxes_overlap(self, other)
    }
}

/// Closed-interval intersection test; rectangles that share an edge or corner overlap.
pub fn bboxes_overlap(a: &Rect, b: &Rect) -> bool {
    a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(x0: u32, y0: u32, x1: u32, y1: u32) -> Rect {
        Rect::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn overlap_examples() {
        assert!(bboxes_overlap(&r(0, 0, 10, 10), &r(5, 5, 15, 15)));
        assert!(!bboxes_overlap(&r(0, 0, 10, 10), &r(11, 0, 20, 10)));
        assert!(bboxes_overlap(&r(0, 0, 10, 10), &r(10, 0, 20, 10)));
    }

    #[test]
    fn degenerate_rect_rejected() {
        assert!(Rect::new(3, 0, 2, 0).is_none());
    }

    fn rect() -> impl Strategy<Value = Rect> {
        (0u32..50, 0u32..50, 0u32..20, 0u32..20).prop_map(|(x, y, w, h)| r(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn symmetric_and_reflexive(a in rect(), b in rect()) {
            prop_assert!(bboxes_overlap(&a, &a));
            prop_assert_eq!(bboxes_overlap(&a, &b), bboxes_overlap(&b, &a));
        }

        #[test]
        fn matches_pixel_intersection(a in rect(), b in rect()) {
            let shared = (a.x0..=a.x1).any(|x| (a.y0..=a.y1).any(|y| b.contains(x, y)));
            prop_assert_eq!(bboxes_overlap(&a, &b), shared);
        }
    }
}
