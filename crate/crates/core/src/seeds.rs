use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A single sparse range measurement projected into the left view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub x: usize,
    pub y: usize,
    pub d: f32,
}

/// A validated set of sparse disparity seeds for one image.
///
/// Seeds are stored sorted by `(y, x)` with at most one entry per pixel;
/// when the input lists a pixel more than once the last entry wins.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    width: usize,
    height: usize,
    seeds: Vec<Seed>,
}

impl SeedSet {
    pub fn new(width: usize, height: usize, seeds: Vec<Seed>, d_max: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "seed set dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        for s in &seeds {
            if s.x >= width || s.y >= height {
                return Err(Error::InvalidSeed(format!(
                    "seed at ({}, {}) outside {}x{} image",
                    s.x, s.y, width, height
                )));
            }
            if !s.d.is_finite() || s.d < 0.0 || s.d > d_max as f32 {
                return Err(Error::InvalidSeed(format!(
                    "seed at ({}, {}) has disparity {} outside [0, {}]",
                    s.x, s.y, s.d, d_max
                )));
            }
        }
        // Stable sort keeps input order among duplicates of a pixel, so a
        // reverse scan keeping the first unseen pixel implements
        // last-write-wins.
        let mut indexed: Vec<(usize, Seed)> = seeds.into_iter().enumerate().collect();
        indexed.sort_by_key(|(i, s)| (s.y, s.x, *i));
        let mut dedup: Vec<Seed> = Vec::with_capacity(indexed.len());
        for (_, s) in indexed {
            if let Some(last) = dedup.last_mut() {
                if last.x == s.x && last.y == s.y {
                    *last = s;
                    continue;
                }
            }
            dedup.push(s);
        }
        Ok(Self {
            width,
            height,
            seeds: dedup,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Seeds in `(y, x)` order.
    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    /// Writes the plain-text seed format: a `<width> <height>` header line
    /// followed by one `x y d` line per seed.
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        (|| -> std::io::Result<()> {
            writeln!(w, "{} {}", self.width, self.height)?;
            for s in &self.seeds {
                writeln!(w, "{} {} {}", s.x, s.y, s.d)?;
            }
            w.flush()
        })()
        .map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads the plain-text seed format written by [`SeedSet::save`].
    pub fn load<P: AsRef<Path>>(path: P, d_max: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut lines = reader.lines();

        let header = lines
            .next()
            .ok_or_else(|| Error::malformed("seeds", path, "missing header line"))?
            .map_err(|e| Error::io(path, e))?;
        let mut parts = header.split_whitespace();
        let width: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::malformed("seeds", path, "header must be '<width> <height>'"))?;
        let height: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::malformed("seeds", path, "header must be '<width> <height>'"))?;
        if parts.next().is_some() {
            return Err(Error::malformed(
                "seeds",
                path,
                "header must be '<width> <height>'",
            ));
        }

        let mut seeds = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let (x, y, d) = (|| -> Option<(usize, usize, f32)> {
                let x = parts.next()?.parse().ok()?;
                let y = parts.next()?.parse().ok()?;
                let d = parts.next()?.parse().ok()?;
                if parts.next().is_some() {
                    return None;
                }
                Some((x, y, d))
            })()
            .ok_or_else(|| {
                Error::malformed(
                    "seeds",
                    path,
                    format!("line {} must be '<x> <y> <d>'", lineno + 2),
                )
            })?;
            seeds.push(Seed { x, y, d });
        }
        Self::new(width, height, seeds, d_max)
    }
}
