//! Tile-level text format: parsing, stitching, slicing and the
//! column-major string encoding used by the sequence models.
//!
//! Levels are rectangular grids of single-character tiles, always 14 rows
//! tall, stored row-major with row 0 at the top. The on-disk format is one
//! text line per row, LF endings, no trailing whitespace.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Fixed height of every level, in tiles.
pub const LEVEL_HEIGHT: usize = 14;

/// The closed tile alphabet in canonical order.
pub const TILE_SYMBOLS: [char; 14] = [
    '-', 'X', 'S', '?', 'Q', 'o', 'E', '<', '>', '[', ']', 'B', 'b', 'x',
];

/// One grid cell. Construction is only possible for the 14 known symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tile(char);

impl Tile {
    pub const EMPTY: Tile = Tile('-');
    pub const GROUND: Tile = Tile('X');
    pub const PATH: Tile = Tile('x');

    pub fn new(symbol: char) -> Option<Tile> {
        if TILE_SYMBOLS.contains(&symbol) {
            Some(Tile(symbol))
        } else {
            None
        }
    }

    pub fn symbol(self) -> char {
        self.0
    }

    /// Index of this tile in [`TILE_SYMBOLS`].
    pub fn index(self) -> usize {
        TILE_SYMBOLS.iter().position(|&s| s == self.0).unwrap()
    }

    /// Path tiles annotate traversal; they never block movement.
    pub fn is_path(self) -> bool {
        self.0 == 'x'
    }
}

impl fmt::Display for Tile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line} has length {found}, expected {expected}")]
    RaggedLines {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("level has {found} lines, expected {}", LEVEL_HEIGHT)]
    BadHeight { found: usize },
    #[error("unknown tile symbol {symbol:?} at row {row}, col {col}")]
    UnknownSymbol { row: usize, col: usize, symbol: char },
    #[error("cannot stitch an empty list of levels")]
    EmptyList,
    #[error("slice [{start}, {start}+{width}) out of bounds for width {grid_width}")]
    OutOfBounds {
        start: usize,
        width: usize,
        grid_width: usize,
    },
    #[error("flattened length {len} is not a positive multiple of {}", LEVEL_HEIGHT)]
    BadLength { len: usize },
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
}

/// A rectangular level: `LEVEL_HEIGHT` rows by `width` columns, row 0 on top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelGrid {
    width: usize,
    cells: Vec<Tile>,
}

impl LevelGrid {
    /// Grid of `width` columns filled with one tile.
    pub fn filled(width: usize, tile: Tile) -> LevelGrid {
        assert!(width >= 1, "level width must be at least 1");
        LevelGrid {
            width,
            cells: vec![tile; LEVEL_HEIGHT * width],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        LEVEL_HEIGHT
    }

    pub fn get(&self, row: usize, col: usize) -> Tile {
        debug_assert!(row < LEVEL_HEIGHT && col < self.width);
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, tile: Tile) {
        debug_assert!(row < LEVEL_HEIGHT && col < self.width);
        self.cells[row * self.width + col] = tile;
    }

    /// Parse the on-disk representation: exactly 14 equal-length lines of
    /// known tile symbols. A single trailing newline is accepted.
    pub fn parse(text: &str) -> Result<LevelGrid, CorpusError> {
        let mut lines: Vec<&str> = text.split('\n').collect();
        if lines.last() == Some(&"") {
            lines.pop();
        }
        if lines.len() != LEVEL_HEIGHT {
            return Err(CorpusError::BadHeight { found: lines.len() });
        }
        let width = lines[0].chars().count();
        if width == 0 {
            return Err(CorpusError::RaggedLines {
                line: 0,
                expected: 1,
                found: 0,
            });
        }
        let mut cells = Vec::with_capacity(LEVEL_HEIGHT * width);
        for (row, line) in lines.iter().enumerate() {
            let count = line.chars().count();
            if count != width {
                return Err(CorpusError::RaggedLines {
                    line: row,
                    expected: width,
                    found: count,
                });
            }
            for (col, symbol) in line.chars().enumerate() {
                let tile = Tile::new(symbol).ok_or(CorpusError::UnknownSymbol {
                    row,
                    col,
                    symbol,
                })?;
                cells.push(tile);
            }
        }
        Ok(LevelGrid { width, cells })
    }

    /// Exact inverse of [`LevelGrid::parse`]: 14 lines, each LF-terminated.
    pub fn render_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * LEVEL_HEIGHT);
        for row in 0..LEVEL_HEIGHT {
            for col in 0..self.width {
                out.push(self.get(row, col).symbol());
            }
            out.push('\n');
        }
        out
    }

    /// Copy columns `[start_col, start_col + width)` into a new grid.
    pub fn slice(&self, start_col: usize, width: usize) -> Result<LevelGrid, CorpusError> {
        if width < 1 || start_col + width > self.width {
            return Err(CorpusError::OutOfBounds {
                start: start_col,
                width,
                grid_width: self.width,
            });
        }
        let mut cells = Vec::with_capacity(LEVEL_HEIGHT * width);
        for row in 0..LEVEL_HEIGHT {
            for col in start_col..start_col + width {
                cells.push(self.get(row, col));
            }
        }
        Ok(LevelGrid { width, cells })
    }

    /// Overwrite columns `[start_col, start_col + src.width)` with `src`.
    pub fn paste(&mut self, start_col: usize, src: &LevelGrid) {
        assert!(start_col + src.width <= self.width);
        for row in 0..LEVEL_HEIGHT {
            for col in 0..src.width {
                self.set(row, start_col + col, src.get(row, col));
            }
        }
    }

    /// One column read top-to-bottom as a 14-character string.
    pub fn column_string(&self, col: usize) -> String {
        (0..LEVEL_HEIGHT).map(|row| self.get(row, col).symbol()).collect()
    }

    /// Serialize column-by-column, each column top-to-bottom, into one string
    /// of length `14 * width`.
    pub fn flatten(&self) -> String {
        let mut out = String::with_capacity(LEVEL_HEIGHT * self.width);
        for col in 0..self.width {
            for row in 0..LEVEL_HEIGHT {
                out.push(self.get(row, col).symbol());
            }
        }
        out
    }

    /// Inverse of [`LevelGrid::flatten`].
    pub fn unflatten(text: &str) -> Result<LevelGrid, CorpusError> {
        let chars: Vec<char> = text.chars().collect();
        if chars.is_empty() || chars.len() % LEVEL_HEIGHT != 0 {
            return Err(CorpusError::BadLength { len: chars.len() });
        }
        let width = chars.len() / LEVEL_HEIGHT;
        let mut grid = LevelGrid::filled(width, Tile::EMPTY);
        for (i, &symbol) in chars.iter().enumerate() {
            let col = i / LEVEL_HEIGHT;
            let row = i % LEVEL_HEIGHT;
            let tile = Tile::new(symbol).ok_or(CorpusError::UnknownSymbol {
                row,
                col,
                symbol,
            })?;
            grid.set(row, col, tile);
        }
        Ok(grid)
    }

    /// Count occurrences of one symbol.
    pub fn count(&self, tile: Tile) -> usize {
        self.cells.iter().filter(|&&t| t == tile).count()
    }
}

/// Concatenate levels left to right. All inputs share the fixed height, so
/// the result's width is the sum of the input widths.
pub fn stitch(levels: &[LevelGrid]) -> Result<LevelGrid, CorpusError> {
    if levels.is_empty() {
        return Err(CorpusError::EmptyList);
    }
    let width: usize = levels.iter().map(|l| l.width).sum();
    let mut grid = LevelGrid::filled(width, Tile::EMPTY);
    let mut offset = 0;
    for level in levels {
        grid.paste(offset, level);
        offset += level.width;
    }
    Ok(grid)
}

/// Read a corpus manifest: one level path per line, relative to the manifest's
/// directory. Blank lines and `#` comments are skipped.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Manifest {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(base.join(line));
    }
    if out.is_empty() {
        return Err(CorpusError::Manifest {
            path: path.display().to_string(),
            message: "manifest names no level files".to_string(),
        });
    }
    Ok(out)
}

/// Load every level named by a manifest, in manifest order.
pub fn load_corpus(manifest: &Path) -> Result<Vec<(PathBuf, LevelGrid)>, CorpusError> {
    let mut levels = Vec::new();
    for path in read_manifest(manifest)? {
        let text = fs::read_to_string(&path).map_err(|e| CorpusError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let grid = LevelGrid::parse(&text)?;
        levels.push((path, grid));
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_all_empty() {
        let text = "---\n".repeat(LEVEL_HEIGHT);
        let grid = LevelGrid::parse(&text).unwrap();
        assert_eq!(grid.width(), 3);
        assert!(
            (0..LEVEL_HEIGHT).all(|r| (0..3).all(|c| grid.get(r, c) == Tile::EMPTY))
        );
    }

    #[test]
    fn parse_rejects_unknown_symbol() {
        let mut lines: Vec<String> = vec!["---".to_string(); LEVEL_HEIGHT];
        lines[5] = "-Z-".to_string();
        let err = LevelGrid::parse(&lines.join("\n")).unwrap_err();
        assert_eq!(
            err,
            CorpusError::UnknownSymbol {
                row: 5,
                col: 1,
                symbol: 'Z'
            }
        );
    }

    #[test]
    fn parse_rejects_bad_height() {
        let text = "---\n".repeat(13);
        assert_eq!(
            LevelGrid::parse(&text).unwrap_err(),
            CorpusError::BadHeight { found: 13 }
        );
    }

    #[test]
    fn parse_rejects_ragged_lines() {
        let mut lines: Vec<String> = vec!["---".to_string(); LEVEL_HEIGHT];
        lines[7] = "----".to_string();
        let err = LevelGrid::parse(&lines.join("\n")).unwrap_err();
        assert_eq!(
            err,
            CorpusError::RaggedLines {
                line: 7,
                expected: 3,
                found: 4
            }
        );
    }

    #[test]
    fn stitch_concatenates_columns() {
        let a = LevelGrid::filled(3, Tile::EMPTY);
        let mut b = LevelGrid::filled(5, Tile::EMPTY);
        b.set(13, 0, Tile::GROUND);
        let s = stitch(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s.width(), 8);
        assert_eq!(s.get(13, 3), Tile::GROUND);
        assert_eq!(stitch(&[a.clone()]).unwrap(), a);
        assert_eq!(stitch(&[]).unwrap_err(), CorpusError::EmptyList);
    }

    #[test]
    fn slice_copies_and_bounds_check() {
        let mut g = LevelGrid::filled(10, Tile::EMPTY);
        g.set(0, 5, Tile::GROUND);
        let full = g.slice(0, g.width()).unwrap();
        assert_eq!(full, g);
        let mut s = g.slice(5, 2).unwrap();
        assert_eq!(s.get(0, 0), Tile::GROUND);
        s.set(0, 0, Tile::EMPTY);
        assert_eq!(g.get(0, 5), Tile::GROUND, "slice must be a copy");
        assert!(matches!(
            g.slice(9, 2),
            Err(CorpusError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn flatten_single_column() {
        let mut g = LevelGrid::filled(1, Tile::EMPTY);
        g.set(13, 0, Tile::GROUND);
        assert_eq!(g.flatten(), "-------------X");
    }

    #[test]
    fn flatten_fifty_columns_is_700_chars() {
        let g = LevelGrid::filled(50, Tile::EMPTY);
        assert_eq!(g.flatten().len(), 700);
    }

    #[test]
    fn unflatten_rejects_bad_length() {
        assert_eq!(
            LevelGrid::unflatten(&"-".repeat(13)).unwrap_err(),
            CorpusError::BadLength { len: 13 }
        );
        assert_eq!(LevelGrid::unflatten("").unwrap_err(), CorpusError::BadLength { len: 0 });
        assert_eq!(LevelGrid::unflatten(&"-".repeat(700)).unwrap().width(), 50);
    }

    #[test]
    fn render_roundtrip() {
        let mut g = LevelGrid::filled(4, Tile::EMPTY);
        g.set(12, 0, Tile::GROUND);
        g.set(11, 2, Tile::PATH);
        let text = g.render_ascii();
        assert_eq!(LevelGrid::parse(&text).unwrap(), g);
        assert!(text.lines().all(|l| l.len() == 4));
    }

    #[test]
    fn manifest_skips_comments() {
        let dir = tempfile::tempdir().unwrap();
        let level = LevelGrid::filled(2, Tile::EMPTY);
        fs::write(dir.path().join("a.txt"), level.render_ascii()).unwrap();
        fs::write(
            dir.path().join("manifest.txt"),
            "# corpus\n\na.txt\n",
        )
        .unwrap();
        let loaded = load_corpus(&dir.path().join("manifest.txt")).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].1, level);
    }
}
