/// Row-major float image with interleaved channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Image {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * channels, "image buffer size");
        Image {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn from_rgb(width: usize, height: usize, rgb: &[[f64; 3]]) -> Self {
        Image::from_data(width, height, 3, rgb.iter().flatten().copied().collect())
    }

    pub fn to_rgb(&self) -> Vec<[f64; 3]> {
        assert_eq!(self.channels, 3);
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize, c: usize) -> &mut f64 {
        &mut self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Rec. 601 luma of an RGB image; single-channel images pass through.
    pub fn luminance(&self) -> Image {
        match self.channels {
            1 => self.clone(),
            3 => Image::from_data(
                self.width,
                self.height,
                1,
                self.data
                    .chunks_exact(3)
                    .map(|c| 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2])
                    .collect(),
            ),
            n => panic!("luminance of a {n}-channel image"),
        }
    }

    /// Extracts one channel as a single-channel image.
    pub fn channel(&self, c: usize) -> Image {
        Image::from_data(
            self.width,
            self.height,
            1,
            self.data.iter().skip(c).step_by(self.channels).copied().collect(),
        )
    }
}
