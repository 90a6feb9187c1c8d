//! Prompt features: counting tiles in level windows, quantizing counts into
//! the keyword grammar, composing/parsing prompt strings, and scoring how
//! well a level matches a prompt.
//!
//! Grammar, one clause per feature, comma-separated, fixed feature order:
//!
//! ```text
//! {no|little|some|many|0..=1000} pipes
//! {no|little|some|many|0..=1000} enemies
//! {little|some|many|0..=1000} blocks
//! {low|high} elevation
//! ```

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::corpus::{LevelGrid, Tile, LEVEL_HEIGHT};

/// Tiles counted as "blocks": solid structure other than pipes.
const BLOCK_SYMBOLS: [char; 6] = ['X', 'S', '?', 'Q', 'B', 'b'];

/// Feature columns in window order; used everywhere clause order matters.
pub const FEATURE_NAMES: [&str; 4] = ["pipes", "enemies", "blocks", "elevation"];

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("prompt has no features")]
    EmptySpec,
    #[error("bad clause {clause:?}: {reason}")]
    BadClause { clause: String, reason: String },
    #[error("unknown feature {feature:?}")]
    UnknownFeature { feature: String },
    #[error("feature {feature:?} appears twice")]
    DuplicateFeature { feature: String },
    #[error("bad quantile config: {0}")]
    BadConfig(String),
}

/// Quantity keywords, smallest band first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Keyword {
    No,
    Little,
    Some,
    Many,
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Keyword::No => "no",
            Keyword::Little => "little",
            Keyword::Some => "some",
            Keyword::Many => "many",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Keyword(Keyword),
    Exact(u32),
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Keyword(k) => write!(f, "{k}"),
            Quantity::Exact(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elevation {
    Low,
    High,
}

impl fmt::Display for Elevation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elevation::Low => write!(f, "low"),
            Elevation::High => write!(f, "high"),
        }
    }
}

/// Raw feature counts for one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureCounts {
    pub pipes: u32,
    pub enemies: u32,
    pub blocks: u32,
    /// Row of the highest unbreakable block, when any exists (row 0 = top).
    pub elevation_row: Option<usize>,
}

/// A structured prompt; absent features are unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PromptSpec {
    pub pipes: Option<Quantity>,
    pub enemies: Option<Quantity>,
    pub blocks: Option<Quantity>,
    pub elevation: Option<Elevation>,
}

impl PromptSpec {
    pub fn is_empty(&self) -> bool {
        self.pipes.is_none()
            && self.enemies.is_none()
            && self.blocks.is_none()
            && self.elevation.is_none()
    }

    /// Grammar check: exact counts bounded, "no blocks" excluded.
    pub fn validate(&self) -> Result<(), PromptError> {
        let check = |q: &Option<Quantity>, feature: &str, allow_no: bool| match q {
            Some(Quantity::Exact(n)) if *n > 1000 => Err(PromptError::BadClause {
                clause: format!("{n} {feature}"),
                reason: "exact counts range over 0..=1000".to_string(),
            }),
            Some(Quantity::Keyword(Keyword::No)) if !allow_no => Err(PromptError::BadClause {
                clause: format!("no {feature}"),
                reason: format!("{feature} has no \"no\" band"),
            }),
            _ => Ok(()),
        };
        check(&self.pipes, "pipes", true)?;
        check(&self.enemies, "enemies", true)?;
        check(&self.blocks, "blocks", false)?;
        Ok(())
    }

    /// Uniform draw over the keyword grammar with every feature present.
    pub fn random_keywords<R: Rng + ?Sized>(rng: &mut R) -> PromptSpec {
        let kw = |rng: &mut R, allow_no: bool| {
            let options: &[Keyword] = if allow_no {
                &[Keyword::No, Keyword::Little, Keyword::Some, Keyword::Many]
            } else {
                &[Keyword::Little, Keyword::Some, Keyword::Many]
            };
            Quantity::Keyword(options[rng.random_range(0..options.len())])
        };
        PromptSpec {
            pipes: Some(kw(rng, true)),
            enemies: Some(kw(rng, true)),
            blocks: Some(kw(rng, false)),
            elevation: Some(if rng.random_range(0..2) == 0 {
                Elevation::Low
            } else {
                Elevation::High
            }),
        }
    }
}

/// Band edges for quantization, auditable via a key=value config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantileConfig {
    /// Lower band edges for pipes: counts at which no/little/some/many start.
    pub pipes: [u32; 4],
    /// Lower band edges for enemies.
    pub enemies: [u32; 4],
    /// Largest count still quantized as "little blocks".
    pub blocks_little_max: u32,
    /// Largest count still quantized as "some blocks".
    pub blocks_some_max: u32,
    /// "high elevation" iff the highest unbreakable block is strictly above
    /// this row.
    pub elevation_row: usize,
}

impl Default for QuantileConfig {
    fn default() -> Self {
        QuantileConfig {
            pipes: [0, 1, 2, 5],
            enemies: [0, 1, 3, 7],
            blocks_little_max: 50,
            blocks_some_max: 75,
            elevation_row: LEVEL_HEIGHT / 2,
        }
    }
}

impl QuantileConfig {
    pub fn to_file_string(&self) -> String {
        format!(
            "pipes_no={}\npipes_little={}\npipes_some={}\npipes_many={}\n\
             enemies_no={}\nenemies_little={}\nenemies_some={}\nenemies_many={}\n\
             blocks_little_max={}\nblocks_some_max={}\nelevation_row={}\n",
            self.pipes[0],
            self.pipes[1],
            self.pipes[2],
            self.pipes[3],
            self.enemies[0],
            self.enemies[1],
            self.enemies[2],
            self.enemies[3],
            self.blocks_little_max,
            self.blocks_some_max,
            self.elevation_row
        )
    }

    pub fn from_file(path: &Path) -> Result<QuantileConfig, PromptError> {
        let text =
            fs::read_to_string(path).map_err(|e| PromptError::BadConfig(e.to_string()))?;
        Self::from_file_string(&text)
    }

    pub fn from_file_string(text: &str) -> Result<QuantileConfig, PromptError> {
        let mut config = QuantileConfig::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PromptError::BadConfig(format!("bad line {line:?}")))?;
            let value: u32 = value
                .trim()
                .parse()
                .map_err(|_| PromptError::BadConfig(format!("bad value in {line:?}")))?;
            match key.trim() {
                "pipes_no" => config.pipes[0] = value,
                "pipes_little" => config.pipes[1] = value,
                "pipes_some" => config.pipes[2] = value,
                "pipes_many" => config.pipes[3] = value,
                "enemies_no" => config.enemies[0] = value,
                "enemies_little" => config.enemies[1] = value,
                "enemies_some" => config.enemies[2] = value,
                "enemies_many" => config.enemies[3] = value,
                "blocks_little_max" => config.blocks_little_max = value,
                "blocks_some_max" => config.blocks_some_max = value,
                "elevation_row" => config.elevation_row = value as usize,
                other => {
                    return Err(PromptError::BadConfig(format!("unknown key {other:?}")))
                }
            }
        }
        Ok(config)
    }
}

/// Count prompt features in a window. Pipes are counted by their left-top
/// tile, so malformed pipe bodies do not count.
pub fn count_features(window: &LevelGrid) -> FeatureCounts {
    let mut pipes = 0;
    let mut enemies = 0;
    let mut blocks = 0;
    let mut elevation_row = None;
    for row in 0..LEVEL_HEIGHT {
        for col in 0..window.width() {
            let symbol = window.get(row, col).symbol();
            match symbol {
                '<' => pipes += 1,
                'E' => enemies += 1,
                _ => {}
            }
            if BLOCK_SYMBOLS.contains(&symbol) {
                blocks += 1;
            }
            if symbol == 'X' && elevation_row.is_none() {
                elevation_row = Some(row);
            }
        }
    }
    FeatureCounts {
        pipes,
        enemies,
        blocks,
        elevation_row,
    }
}

fn keyword_band(count: u32, edges: &[u32; 4]) -> Keyword {
    if count >= edges[3] {
        Keyword::Many
    } else if count >= edges[2] {
        Keyword::Some
    } else if count >= edges[1] {
        Keyword::Little
    } else {
        Keyword::No
    }
}

/// Map raw counts onto the keyword grammar. Elevation is present only when
/// the window contains an unbreakable block.
pub fn quantize(counts: &FeatureCounts, config: &QuantileConfig) -> PromptSpec {
    let blocks = if counts.blocks > config.blocks_some_max {
        Keyword::Many
    } else if counts.blocks > config.blocks_little_max {
        Keyword::Some
    } else {
        Keyword::Little
    };
    PromptSpec {
        pipes: Some(Quantity::Keyword(keyword_band(counts.pipes, &config.pipes))),
        enemies: Some(Quantity::Keyword(keyword_band(
            counts.enemies,
            &config.enemies,
        ))),
        blocks: Some(Quantity::Keyword(blocks)),
        elevation: counts.elevation_row.map(|row| {
            if row < config.elevation_row {
                Elevation::High
            } else {
                Elevation::Low
            }
        }),
    }
}

/// Render a spec as a prompt string, clauses in fixed feature order.
pub fn compose_prompt(spec: &PromptSpec) -> Result<String, PromptError> {
    if spec.is_empty() {
        return Err(PromptError::EmptySpec);
    }
    spec.validate()?;
    let mut clauses = Vec::new();
    if let Some(q) = spec.pipes {
        clauses.push(format!("{q} pipes"));
    }
    if let Some(q) = spec.enemies {
        clauses.push(format!("{q} enemies"));
    }
    if let Some(q) = spec.blocks {
        clauses.push(format!("{q} blocks"));
    }
    if let Some(e) = spec.elevation {
        clauses.push(format!("{e} elevation"));
    }
    Ok(clauses.join(", "))
}

/// Inverse of [`compose_prompt`]; case-insensitive, whitespace-tolerant.
pub fn parse_prompt(text: &str) -> Result<PromptSpec, PromptError> {
    let mut spec = PromptSpec::default();
    let text = text.to_lowercase();
    let clauses: Vec<&str> = text.split(',').map(str::trim).collect();
    if clauses.iter().all(|c| c.is_empty()) {
        return Err(PromptError::EmptySpec);
    }
    for clause in clauses {
        if clause.is_empty() {
            continue;
        }
        let (quantity_word, feature) =
            clause
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| PromptError::BadClause {
                    clause: clause.to_string(),
                    reason: "expected \"<quantity> <feature>\"".to_string(),
                })?;
        let quantity_word = quantity_word.trim();
        match feature {
            "pipes" | "enemies" | "blocks" => {
                let quantity = match quantity_word {
                    "no" => Quantity::Keyword(Keyword::No),
                    "little" => Quantity::Keyword(Keyword::Little),
                    "some" => Quantity::Keyword(Keyword::Some),
                    "many" => Quantity::Keyword(Keyword::Many),
                    number => {
                        let n: u32 =
                            number.parse().map_err(|_| PromptError::BadClause {
                                clause: clause.to_string(),
                                reason: format!("bad quantity {number:?}"),
                            })?;
                        Quantity::Exact(n)
                    }
                };
                let slot = match feature {
                    "pipes" => &mut spec.pipes,
                    "enemies" => &mut spec.enemies,
                    _ => &mut spec.blocks,
                };
                if slot.is_some() {
                    return Err(PromptError::DuplicateFeature {
                        feature: feature.to_string(),
                    });
                }
                *slot = Some(quantity);
            }
            "elevation" => {
                let elevation = match quantity_word {
                    "low" => Elevation::Low,
                    "high" => Elevation::High,
                    other => {
                        return Err(PromptError::BadClause {
                            clause: clause.to_string(),
                            reason: format!("elevation is \"low\" or \"high\", not {other:?}"),
                        })
                    }
                };
                if spec.elevation.is_some() {
                    return Err(PromptError::DuplicateFeature {
                        feature: "elevation".to_string(),
                    });
                }
                spec.elevation = Some(elevation);
            }
            other => {
                return Err(PromptError::UnknownFeature {
                    feature: other.to_string(),
                })
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Per-feature agreement between a level and a prompt; `None` marks features
/// the prompt leaves unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchReport {
    pub pipes: Option<bool>,
    pub enemies: Option<bool>,
    pub blocks: Option<bool>,
    pub elevation: Option<bool>,
}

impl MatchReport {
    pub fn all_true(&self) -> bool {
        [self.pipes, self.enemies, self.blocks, self.elevation]
            .iter()
            .all(|f| f.unwrap_or(true))
    }
}

/// Check each promised feature: keywords agree after quantization, exact
/// counts agree exactly.
pub fn prompt_match(level: &LevelGrid, spec: &PromptSpec, config: &QuantileConfig) -> MatchReport {
    let counts = count_features(level);
    let quantized = quantize(&counts, config);
    let check = |want: Option<Quantity>, got: Option<Quantity>, count: u32| {
        want.map(|want| match want {
            Quantity::Keyword(k) => got == Some(Quantity::Keyword(k)),
            Quantity::Exact(n) => count == n,
        })
    };
    MatchReport {
        pipes: check(spec.pipes, quantized.pipes, counts.pipes),
        enemies: check(spec.enemies, quantized.enemies, counts.enemies),
        blocks: check(spec.blocks, quantized.blocks, counts.blocks),
        elevation: spec.elevation.map(|e| quantized.elevation == Some(e)),
    }
}

/// One (window, prompt) training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowAnnotation {
    pub start_col: usize,
    pub prompt: String,
}

/// Annotate every window of `window_cols` columns at the given stride.
pub fn annotate_windows(
    grid: &LevelGrid,
    window_cols: usize,
    stride: usize,
    config: &QuantileConfig,
) -> Vec<WindowAnnotation> {
    assert!(stride >= 1);
    let mut out = Vec::new();
    if grid.width() < window_cols {
        return out;
    }
    let mut start = 0;
    while start + window_cols <= grid.width() {
        let window = grid.slice(start, window_cols).expect("window in bounds");
        let spec = quantize(&count_features(&window), config);
        let prompt = compose_prompt(&spec).expect("quantized spec is never empty");
        out.push(WindowAnnotation {
            start_col: start,
            prompt,
        });
        start += stride;
    }
    out
}

pub fn write_annotations(path: &Path, annotations: &[WindowAnnotation]) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["start_col", "prompt"])?;
    for a in annotations {
        writer.write_record([a.start_col.to_string(), a.prompt.clone()])?;
    }
    writer.flush()
}

pub fn read_annotations(path: &Path) -> Result<Vec<WindowAnnotation>, PromptError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| PromptError::BadConfig(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| PromptError::BadConfig(format!("{}: {e}", path.display())))?;
        let start_col = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PromptError::BadConfig("bad start_col".to_string()))?;
        let prompt = record.get(1).unwrap_or_default().to_string();
        out.push(WindowAnnotation { start_col, prompt });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tile;

    fn tile(c: char) -> Tile {
        Tile::new(c).unwrap()
    }

    #[test]
    fn empty_window_counts() {
        let g = LevelGrid::filled(50, Tile::EMPTY);
        let c = count_features(&g);
        assert_eq!(
            c,
            FeatureCounts {
                pipes: 0,
                enemies: 0,
                blocks: 0,
                elevation_row: None
            }
        );
    }

    #[test]
    fn one_pipe_counts_once() {
        let mut g = LevelGrid::filled(50, Tile::EMPTY);
        g.set(10, 5, tile('<'));
        g.set(10, 6, tile('>'));
        g.set(11, 5, tile('['));
        g.set(11, 6, tile(']'));
        assert_eq!(count_features(&g).pipes, 1);
    }

    #[test]
    fn table_anchor_counts_quantize_to_many() {
        let mut g = LevelGrid::filled(50, Tile::EMPTY);
        for i in 0..5 {
            g.set(0, i, tile('<'));
        }
        for i in 0..7 {
            g.set(1, i, tile('E'));
        }
        let mut placed = 0;
        'outer: for row in 4..LEVEL_HEIGHT {
            for col in 0..50 {
                if placed == 176 {
                    break 'outer;
                }
                g.set(row, col, tile('S'));
                placed += 1;
            }
        }
        let counts = count_features(&g);
        assert_eq!((counts.pipes, counts.enemies, counts.blocks), (5, 7, 176));
        let spec = quantize(&counts, &QuantileConfig::default());
        assert_eq!(spec.pipes, Some(Quantity::Keyword(Keyword::Many)));
        assert_eq!(spec.enemies, Some(Quantity::Keyword(Keyword::Many)));
        assert_eq!(spec.blocks, Some(Quantity::Keyword(Keyword::Many)));
    }

    #[test]
    fn quantize_band_edges() {
        let config = QuantileConfig::default();
        let q = |pipes, enemies, blocks| {
            quantize(
                &FeatureCounts {
                    pipes,
                    enemies,
                    blocks,
                    elevation_row: None,
                },
                &config,
            )
        };
        assert_eq!(q(0, 0, 0).pipes, Some(Quantity::Keyword(Keyword::No)));
        assert_eq!(q(1, 0, 0).pipes, Some(Quantity::Keyword(Keyword::Little)));
        assert_eq!(q(2, 0, 0).pipes, Some(Quantity::Keyword(Keyword::Some)));
        assert_eq!(q(3, 0, 0).pipes, Some(Quantity::Keyword(Keyword::Some)));
        assert_eq!(q(4, 0, 0).pipes, Some(Quantity::Keyword(Keyword::Some)));
        assert_eq!(q(5, 0, 0).pipes, Some(Quantity::Keyword(Keyword::Many)));
        assert_eq!(q(0, 3, 0).enemies, Some(Quantity::Keyword(Keyword::Some)));
        assert_eq!(q(0, 7, 0).enemies, Some(Quantity::Keyword(Keyword::Many)));
        assert_eq!(q(0, 0, 0).blocks, Some(Quantity::Keyword(Keyword::Little)));
        assert_eq!(q(0, 0, 50).blocks, Some(Quantity::Keyword(Keyword::Little)));
        assert_eq!(q(0, 0, 51).blocks, Some(Quantity::Keyword(Keyword::Some)));
        assert_eq!(q(0, 0, 75).blocks, Some(Quantity::Keyword(Keyword::Some)));
        assert_eq!(q(0, 0, 76).blocks, Some(Quantity::Keyword(Keyword::Many)));
        assert_eq!(q(0, 0, 176).blocks, Some(Quantity::Keyword(Keyword::Many)));
    }

    #[test]
    fn elevation_split() {
        let config = QuantileConfig::default();
        let q = |row| {
            quantize(
                &FeatureCounts {
                    pipes: 0,
                    enemies: 0,
                    blocks: 1,
                    elevation_row: row,
                },
                &config,
            )
            .elevation
        };
        assert_eq!(q(None), None);
        assert_eq!(q(Some(0)), Some(Elevation::High));
        assert_eq!(q(Some(6)), Some(Elevation::High));
        assert_eq!(q(Some(7)), Some(Elevation::Low));
        assert_eq!(q(Some(13)), Some(Elevation::Low));
    }

    #[test]
    fn compose_examples() {
        let spec = PromptSpec {
            pipes: Some(Quantity::Keyword(Keyword::Many)),
            enemies: Some(Quantity::Keyword(Keyword::Many)),
            blocks: Some(Quantity::Keyword(Keyword::Many)),
            elevation: None,
        };
        assert_eq!(
            compose_prompt(&spec).unwrap(),
            "many pipes, many enemies, many blocks"
        );
        let exact = PromptSpec {
            pipes: Some(Quantity::Exact(0)),
            ..Default::default()
        };
        assert_eq!(compose_prompt(&exact).unwrap(), "0 pipes");
        assert_eq!(
            compose_prompt(&PromptSpec::default()).unwrap_err(),
            PromptError::EmptySpec
        );
    }

    #[test]
    fn parse_examples() {
        let spec = parse_prompt("many pipes, some enemies").unwrap();
        assert_eq!(spec.pipes, Some(Quantity::Keyword(Keyword::Many)));
        assert_eq!(spec.enemies, Some(Quantity::Keyword(Keyword::Some)));
        assert_eq!(spec.blocks, None);

        let spec = parse_prompt("low elevation").unwrap();
        assert_eq!(spec.elevation, Some(Elevation::Low));

        assert_eq!(
            parse_prompt("many dragons").unwrap_err(),
            PromptError::UnknownFeature {
                feature: "dragons".to_string()
            }
        );
        assert!(matches!(
            parse_prompt("many pipes, many pipes").unwrap_err(),
            PromptError::DuplicateFeature { .. }
        ));
        assert!(matches!(
            parse_prompt("no blocks").unwrap_err(),
            PromptError::BadClause { .. }
        ));
        assert!(matches!(
            parse_prompt("1001 pipes").unwrap_err(),
            PromptError::BadClause { .. }
        ));
        assert!(matches!(
            parse_prompt("7 elevation").unwrap_err(),
            PromptError::BadClause { .. }
        ));
    }

    #[test]
    fn parse_is_case_insensitive() {
        let spec = parse_prompt("Many pipes, No enemies, Some blocks").unwrap();
        assert_eq!(spec.pipes, Some(Quantity::Keyword(Keyword::Many)));
        assert_eq!(spec.enemies, Some(Quantity::Keyword(Keyword::No)));
    }

    #[test]
    fn four_pipes_is_not_many() {
        let mut g = LevelGrid::filled(50, Tile::EMPTY);
        for i in 0..4 {
            g.set(10, i * 3, tile('<'));
        }
        let spec = PromptSpec {
            pipes: Some(Quantity::Keyword(Keyword::Many)),
            ..Default::default()
        };
        let report = prompt_match(&g, &spec, &QuantileConfig::default());
        assert_eq!(report.pipes, Some(false));
    }

    #[test]
    fn empty_level_matches_no_pipes_no_enemies() {
        let g = LevelGrid::filled(50, Tile::EMPTY);
        let spec = parse_prompt("no pipes, no enemies").unwrap();
        let report = prompt_match(&g, &spec, &QuantileConfig::default());
        assert!(report.all_true());
    }

    #[test]
    fn exact_counts_match_exactly() {
        let mut g = LevelGrid::filled(50, Tile::EMPTY);
        for i in 0..4 {
            g.set(2, i, tile('E'));
        }
        let config = QuantileConfig::default();
        let yes = PromptSpec {
            enemies: Some(Quantity::Exact(4)),
            ..Default::default()
        };
        let no = PromptSpec {
            enemies: Some(Quantity::Exact(5)),
            ..Default::default()
        };
        assert!(prompt_match(&g, &yes, &config).all_true());
        assert!(!prompt_match(&g, &no, &config).all_true());
    }

    #[test]
    fn quantile_config_roundtrip() {
        let config = QuantileConfig::default();
        let parsed = QuantileConfig::from_file_string(&config.to_file_string()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn annotation_io_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.csv");
        let annotations = vec![
            WindowAnnotation {
                start_col: 0,
                prompt: "no pipes, little enemies, little blocks, low elevation".to_string(),
            },
            WindowAnnotation {
                start_col: 7,
                prompt: "many pipes, many enemies, many blocks".to_string(),
            },
        ];
        write_annotations(&path, &annotations).unwrap();
        assert_eq!(read_annotations(&path).unwrap(), annotations);
    }
}
