use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel coordinates, inclusive-exclusive:
/// columns `x0..x1`, rows `y0..y1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub label: String,
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox {
    pub fn new(label: impl Into<String>, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidArgument(format!(
                "degenerate box ({x0},{y0})-({x1},{y1})"
            )));
        }
        Ok(Self {
            label: label.into(),
            x0,
            y0,
            x1,
            y1,
        })
    }

    pub fn within(&self, side: usize) -> bool {
        self.x1 <= side && self.y1 <= side
    }

    pub fn check_within(&self, side: usize) -> Result<()> {
        if self.within(side) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "box {self} exceeds image side {side}"
            )))
        }
    }

    #[inline]
    pub fn contains(&self, col: usize, row: usize) -> bool {
        col >= self.x0 && col < self.x1 && row >= self.y0 && row < self.y1
    }

    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.label, self.x0, self.y0, self.x1, self.y1)
    }
}

/// Row-major membership mask of the union of `boxes` on an `side x side` grid.
pub fn union_mask(boxes: &[BoundingBox], side: usize) -> Vec<bool> {
    let mut mask = vec![false; side * side];
    for b in boxes {
        for row in b.y0.min(side)..b.y1.min(side) {
            for col in b.x0.min(side)..b.x1.min(side) {
                mask[row * side + col] = true;
            }
        }
    }
    mask
}

/// Parses a box list: one `label x0 y0 x1 y1` per line. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_boxes(text: &str) -> Result<Vec<BoundingBox>> {
    let mut boxes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(format!(
                "expected `label x0 y0 x1 y1`, found {} fields",
                fields.len()
            )));
        }
        let mut coords = [0usize; 4];
        for (slot, field) in coords.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|_| parse_err(format!("bad coordinate `{field}`")))?;
        }
        let [x0, y0, x1, y1] = coords;
        let b = BoundingBox::new(fields[0], x0, y0, x1, y1)
            .map_err(|e| parse_err(e.to_string()))?;
        boxes.push(b);
    }
    Ok(boxes)
}

pub fn format_boxes(boxes: &[BoundingBox]) -> String {
    boxes.iter().map(|b| format!("{b}\n")).collect()
}

pub fn read_boxes(path: impl AsRef<Path>) -> Result<Vec<BoundingBox>> {
    parse_boxes(&std::fs::read_to_string(path)?)
}
