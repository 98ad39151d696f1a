use crate::error::{Error, Result};

/// Largest storable matching cost; also the sentinel written for disparities
/// that reach outside the right image.
pub const COST_CAP: u16 = u16::MAX;

/// Dense per-(pixel, disparity) matching costs, indexed `(y, x, d)` with the
/// disparity axis contiguous. Disparity 0 is a valid level, so a volume with
/// `d_max = N` holds `N + 1` slices per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    d_max: usize,
    costs: Vec<u16>,
}

impl CostVolume {
    /// Zero-filled volume.
    pub fn zeroed(width: usize, height: usize, d_max: usize) -> Self {
        Self {
            width,
            height,
            d_max,
            costs: vec![0; width * height * (d_max + 1)],
        }
    }

    /// Wraps an existing cost buffer laid out `(y, x, d)`.
    pub fn from_costs(width: usize, height: usize, d_max: usize, costs: Vec<u16>) -> Result<Self> {
        let expected = width * height * (d_max + 1);
        if costs.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "cost buffer has {} entries, expected {}x{}x{} = {}",
                costs.len(),
                width,
                height,
                d_max + 1,
                expected
            )));
        }
        Ok(Self {
            width,
            height,
            d_max,
            costs,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Number of disparity slices (`d_max + 1`).
    pub fn levels(&self) -> usize {
        self.d_max + 1
    }

    pub fn costs(&self) -> &[u16] {
        &self.costs
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, d: usize) -> u16 {
        self.costs[(y * self.width + x) * (self.d_max + 1) + d]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, d: usize, cost: u16) {
        self.costs[(y * self.width + x) * (self.d_max + 1) + d] = cost;
    }

    /// All disparity levels of one pixel.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u16] {
        let levels = self.d_max + 1;
        let base = (y * self.width + x) * levels;
        &self.costs[base..base + levels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u16] {
        let levels = self.d_max + 1;
        let base = (y * self.width + x) * levels;
        &mut self.costs[base..base + levels]
    }

    /// One image row of costs (`width × levels` entries).
    #[inline]
    pub fn row(&self, y: usize) -> &[u16] {
        let stride = self.width * (self.d_max + 1);
        &self.costs[y * stride..(y + 1) * stride]
    }

    pub fn rows_mut(&mut self) -> std::slice::ChunksMut<'_, u16> {
        self.costs.chunks_mut(self.width * (self.d_max + 1))
    }

    pub(crate) fn costs_mut(&mut self) -> &mut [u16] {
        &mut self.costs
    }
}
