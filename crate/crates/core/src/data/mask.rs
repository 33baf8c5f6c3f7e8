use crate::geometry::Rect;

use super::DataError;

/// Binary pixel region, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![true; width as usize * height as usize] }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, DataError> {
        if bits.len() != width as usize * height as usize {
            return Err(DataError::Invariant(format!(
                "mask holds {} bits, {width}x{height} needs {}",
                bits.len(),
                width as usize * height as usize
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    /// Filled axis-aligned rectangle, clipped to the mask.
    pub fn from_rect(width: u32, height: u32, rect: Rect) -> Self {
        Self::from_fn(width, height, |x, y| rect.contains(x, y))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = on;
    }

    #[inline]
    pub fn at(&self, i: usize) -> bool {
        self.bits[i]
    }

    #[inline]
    pub fn put(&mut self, i: usize, on: bool) {
        self.bits[i] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn coverage(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    /// Tight bounding box of the set pixels; `None` for an empty mask.
    pub fn bbox(&self) -> Option<Rect> {
        let w = self.width as usize;
        let mut it = self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| (i % w, i / w));
        let (x, y) = it.next()?;
        let (mut x0, mut x1, y0, mut y1) = (x, x, y, y);
        for (x, y) in it {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y1 = y;
        }
        Rect::new(x0 as u32, y0 as u32, x1 as u32, y1 as u32)
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.dims(), other.dims(), "mask dimensions differ");
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Pixel-wise union. Panics on a dimension mismatch; see [`Mask::check_same_dims`].
    pub fn union(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Mask {
        Mask { width: self.width, height: self.height, bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn intersects(&self, other: &Mask) -> bool {
        assert_eq!(self.dims(), other.dims(), "mask dimensions differ");
        self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b)
    }

    pub fn check_same_dims(&self, other: &Mask, what: &str) -> Result<(), DataError> {
        if self.dims() != other.dims() {
            return Err(DataError::DimensionMismatch {
                what: what.to_string(),
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    /// Intersection over union; two empty masks count as identical.
    pub fn iou(&self, other: &Mask) -> f64 {
        assert_eq!(self.dims(), other.dims(), "mask dimensions differ");
        let (mut inter, mut uni) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            uni += (a || b) as usize;
        }
        if uni == 0 {
            1.0
        } else {
            inter as f64 / uni as f64
        }
    }

    /// Square (Chebyshev) dilation by `radius` pixels.
    pub fn dilate(&self, radius: u32) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h, r) = (self.width as usize, self.height as usize, radius as usize);
        let mut rows = vec![false; w * h];
        for y in 0..h {
            let row = &self.bits[y * w..(y + 1) * w];
            for x in 0..w {
                let lo = x.saturating_sub(r);
                let hi = (x + r).min(w - 1);
                rows[y * w + x] = row[lo..=hi].iter().any(|&b| b);
            }
        }
        let mut out = vec![false; w * h];
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(h - 1);
            for x in 0..w {
                out[y * w + x] = (lo..=hi).any(|yy| rows[yy * w + x]);
            }
        }
        Mask { width: self.width, height: self.height, bits: out }
    }
}
