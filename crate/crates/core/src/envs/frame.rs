use std::collections::VecDeque;
use std::sync::Arc;

use crate::{Error, Result, Tensor};

pub const STACK_DEPTH: usize = 3;

/// Binary G x G image, row-major, background 0 and body 1. Pixel storage is
/// shared, so cloning a frame is cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    size: usize,
    pixels: Arc<[f64]>,
}

impl Frame {
    pub fn from_pixels(size: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != size * size {
            return Err(Error::Shape(format!(
                "{size}x{size} frame needs {} pixels, got {}",
                size * size,
                pixels.len()
            )));
        }
        if pixels.iter().any(|&p| p != 0.0 && p != 1.0) {
            return Err(Error::Shape("frame pixels must be 0 or 1".into()));
        }
        Ok(Self { size, pixels: pixels.into() })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.size + x]
    }

    pub fn lit_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1.0).count()
    }
}

/// Mutable raster used while drawing.
pub(crate) struct Canvas {
    size: usize,
    pixels: Vec<f64>,
}

impl Canvas {
    pub fn new(size: usize) -> Self {
        Self { size, pixels: vec![0.0; size * size] }
    }

    pub fn set(&mut self, x: i64, y: i64) {
        let n = self.size as i64;
        if (0..n).contains(&x) && (0..n).contains(&y) {
            self.pixels[(y * n + x) as usize] = 1.0;
        }
    }

    pub fn finish(self) -> Frame {
        Frame { size: self.size, pixels: self.pixels.into() }
    }
}

/// Integer points of the Bresenham line from `(x0, y0)` to `(x1, y1)`,
/// both endpoints included.
pub fn bresenham(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    let mut points = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        points.push((x, y));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    points
}

/// Three consecutive frames, oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedObservation {
    frames: [Frame; STACK_DEPTH],
}

impl StackedObservation {
    pub fn frames(&self) -> &[Frame; STACK_DEPTH] {
        &self.frames
    }

    pub fn image_size(&self) -> usize {
        self.frames[0].size
    }

    /// Number of values in the `3 x G x G` layout.
    pub fn len(&self) -> usize {
        STACK_DEPTH * self.image_size() * self.image_size()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Appends the `3 x G x G` values, oldest channel first.
    pub fn extend_into(&self, out: &mut Vec<f64>) {
        for frame in &self.frames {
            out.extend_from_slice(frame.pixels());
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.extend_into(&mut out);
        out
    }
}

/// Stacks the last (up to three) frames of `history`, repeating the oldest
/// available frame when fewer than three exist.
pub fn stack(history: &[Frame]) -> Result<StackedObservation> {
    let Some(first) = history.first() else {
        return Err(Error::Empty("frame history".into()));
    };
    if history.iter().any(|f| f.size != first.size) {
        return Err(Error::Shape("frames in a stack must share one size".into()));
    }
    let window = &history[history.len().saturating_sub(STACK_DEPTH)..];
    let pad = STACK_DEPTH - window.len();
    let frames = std::array::from_fn(|i| if i < pad { window[0].clone() } else { window[i - pad].clone() });
    Ok(StackedObservation { frames })
}

/// `N x 3 x G x G` tensor from a batch of observations.
pub fn stack_batch<'a, I>(observations: I) -> Result<Tensor>
where
    I: IntoIterator<Item = &'a StackedObservation>,
{
    let mut data = Vec::new();
    let mut count = 0;
    let mut size = None;
    for obs in observations {
        if *size.get_or_insert(obs.image_size()) != obs.image_size() {
            return Err(Error::Shape("mixed image sizes in one batch".into()));
        }
        obs.extend_into(&mut data);
        count += 1;
    }
    let size = size.ok_or_else(|| Error::Empty("observation batch".into()))?;
    Tensor::new(vec![count, STACK_DEPTH, size, size], data)
}

/// Sliding window over the most recent frames of one episode.
#[derive(Clone, Debug, Default)]
pub struct FrameStack {
    window: VecDeque<Frame>,
}

impl FrameStack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }

    pub fn push(&mut self, frame: Frame) {
        if self.window.len() == STACK_DEPTH {
            self.window.pop_front();
        }
        self.window.push_back(frame);
    }

    pub fn observation(&self) -> Result<StackedObservation> {
        let (a, b) = self.window.as_slices();
        if b.is_empty() {
            stack(a)
        } else {
            stack(&self.window.iter().cloned().collect::<Vec<_>>())
        }
    }
}
