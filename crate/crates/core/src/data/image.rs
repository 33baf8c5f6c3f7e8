use super::DataError;

/// Largest depth representable by the 16-bit millimeter encoding.
pub const MAX_DEPTH_M: f64 = 65.535;

/// Row-major 8-bit RGB image.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Image({}x{})", self.width, self.height)
    }
}

impl Image {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, DataError> {
        if width == 0 || height == 0 {
            return Err(DataError::Invariant(format!("image size {width}x{height}")));
        }
        if data.len() != width as usize * height as usize * 3 {
            return Err(DataError::Invariant(format!(
                "image buffer holds {} bytes, {width}x{height} RGB needs {}",
                data.len(),
                width as usize * height as usize * 3
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Panics on a zero dimension.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let data = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self { width, height, data }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut img = Self::filled(width, height, [0; 3]);
        for y in 0..height {
            for x in 0..width {
                img.set_pixel(x, y, f(x, y));
            }
        }
        img
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

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Pixel by linear index.
    #[inline]
    pub fn at(&self, i: usize) -> [u8; 3] {
        [self.data[3 * i], self.data[3 * i + 1], self.data[3 * i + 2]]
    }

    #[inline]
    pub fn put(&mut self, i: usize, rgb: [u8; 3]) {
        self.data[3 * i..3 * i + 3].copy_from_slice(&rgb);
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Row-major depth in meters; `0.0` marks an invalid pixel.
#[derive(Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl std::fmt::Debug for DepthMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DepthMap({}x{})", self.width, self.height)
    }
}

impl DepthMap {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, DataError> {
        if width == 0 || height == 0 {
            return Err(DataError::Invariant(format!("depth size {width}x{height}")));
        }
        if data.len() != width as usize * height as usize {
            return Err(DataError::Invariant(format!(
                "depth buffer holds {} values, {width}x{height} needs {}",
                data.len(),
                width as usize * height as usize
            )));
        }
        Ok(Self { width, height, data })
    }

    /// All-invalid map. Panics on a zero dimension.
    pub fn invalid(width: u32, height: u32) -> Self {
        Self::constant(width, height, 0.0)
    }

    pub fn constant(width: u32, height: u32, value: f32) -> Self {
        assert!(width > 0 && height > 0, "depth dimensions must be positive");
        Self { width, height, data: vec![value; width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f32) -> Self {
        let mut d = Self::invalid(width, height);
        for y in 0..height {
            for x in 0..width {
                d.set(x, y, f(x, y));
            }
        }
        d
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

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: f32) {
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    /// Valid depth at `(x, y)`, or `None` for the sentinel.
    pub fn valid(&self, x: u32, y: u32) -> Option<f32> {
        let d = self.get(x, y);
        (d > 0.0 && d.is_finite()).then_some(d)
    }

    /// Stored 16-bit millimeter value for a depth in meters (round half up).
    pub fn quantize_mm(meters: f32) -> Result<u16, DataError> {
        if !(meters.is_finite() && meters >= 0.0) {
            return Err(DataError::Invariant(format!("depth {meters} is not a valid depth")));
        }
        let mm = (meters as f64 * 1000.0 + 0.5).floor();
        if mm > u16::MAX as f64 {
            return Err(DataError::Invariant(format!(
                "depth {meters} m exceeds the representable {MAX_DEPTH_M} m"
            )));
        }
        Ok(mm as u16)
    }

    pub fn dequantize_mm(mm: u16) -> f32 {
        (mm as f64 / 1000.0) as f32
    }

    /// Copy with every value passed through the millimeter encoding once.
    pub fn quantized(&self) -> Result<DepthMap, DataError> {
        let data = self
            .data
            .iter()
            .map(|&d| Self::quantize_mm(d).map(Self::dequantize_mm))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DepthMap { width: self.width, height: self.height, data })
    }

    /// Bitwise equality, so NaN payloads compare like any other value.
    pub fn bit_eq(&self, other: &DepthMap) -> bool {
        self.dims() == other.dims()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
