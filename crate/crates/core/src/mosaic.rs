//! Mosaic plots of two-way tables as standalone SVG, optionally shaded by
//! Pearson residuals.

use std::fmt::Write as _;

use thiserror::Error;

use crate::stats::ContingencyTable;

pub const DEFAULT_GAP: f64 = 0.01;
/// Column labels narrower than this (unit-square width) are drawn rotated.
pub const ROTATE_BELOW: f64 = 0.08;

const VIEW_W: f64 = 1000.0;
const VIEW_H: f64 = 800.0;
const PLOT_X: f64 = 150.0;
const PLOT_Y: f64 = 70.0;
const PLOT_W: f64 = 620.0;
const PLOT_H: f64 = 560.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MosaicError {
    #[error("table has no observations")]
    EmptyTable,
    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch { expected_rows: usize, expected_cols: usize, rows: usize, cols: usize },
}

/// Rows × columns of counts with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MosaicTable {
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl MosaicTable {
    pub fn new(row_names: Vec<String>, col_names: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, MosaicError> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        if rows != row_names.len() || counts.iter().any(|r| r.len() != col_names.len()) {
            return Err(MosaicError::DimensionMismatch {
                expected_rows: row_names.len(),
                expected_cols: col_names.len(),
                rows,
                cols,
            });
        }
        Ok(MosaicTable { row_names, col_names, counts })
    }
}

impl From<&ContingencyTable> for MosaicTable {
    fn from(t: &ContingencyTable) -> Self {
        MosaicTable {
            row_names: t.row_names.to_vec(),
            col_names: t.col_names.clone(),
            counts: t.counts.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutOptions {
    pub gap: f64,
    /// Put table rows on the x axis instead of table columns.
    pub transpose: bool,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        LayoutOptions { gap: DEFAULT_GAP, transpose: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    /// Cell of the source table (row, column), independent of transposition.
    pub cell: (usize, usize),
    pub row_name: String,
    pub col_name: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MosaicLayout {
    pub tiles: Vec<Tile>,
    pub gap: f64,
    pub transposed: bool,
    /// Labels along x (one per vertical strip) and y, in drawing order.
    pub x_labels: Vec<String>,
    pub y_labels: Vec<String>,
    pub n_rows: usize,
    pub n_cols: usize,
}

pub fn layout(table: &MosaicTable) -> Result<MosaicLayout, MosaicError> {
    layout_with(table, LayoutOptions::default())
}

/// Split x by the margins of the strip variable, then y within each strip.
pub fn layout_with(table: &MosaicTable, opts: LayoutOptions) -> Result<MosaicLayout, MosaicError> {
    let n_rows = table.row_names.len();
    let n_cols = table.col_names.len();
    let total: u64 = table.counts.iter().flatten().sum();
    if total == 0 {
        return Err(MosaicError::EmptyTable);
    }
    let (strips, stack) = if opts.transpose { (n_rows, n_cols) } else { (n_cols, n_rows) };
    let count = |s: usize, k: usize| if opts.transpose { table.counts[s][k] } else { table.counts[k][s] };
    let cell = |s: usize, k: usize| if opts.transpose { (s, k) } else { (k, s) };

    let gap = opts.gap;
    let avail_x = 1.0 - gap * (strips.saturating_sub(1)) as f64;
    let avail_y = 1.0 - gap * (stack.saturating_sub(1)) as f64;
    let mut tiles = Vec::with_capacity(strips * stack);
    let mut x = 0.0;
    for s in 0..strips {
        let strip_total: u64 = (0..stack).map(|k| count(s, k)).sum();
        let w = avail_x * strip_total as f64 / total as f64;
        let mut y = 0.0;
        for k in 0..stack {
            let h = if strip_total == 0 { 0.0 } else { avail_y * count(s, k) as f64 / strip_total as f64 };
            let (i, j) = cell(s, k);
            tiles.push(Tile {
                cell: (i, j),
                row_name: table.row_names[i].clone(),
                col_name: table.col_names[j].clone(),
                x,
                y,
                w,
                h,
            });
            y += h + gap;
        }
        x += w + gap;
    }
    let (x_labels, y_labels) = if opts.transpose {
        (table.row_names.clone(), table.col_names.clone())
    } else {
        (table.col_names.clone(), table.row_names.clone())
    };
    Ok(MosaicLayout { tiles, gap, transposed: opts.transpose, x_labels, y_labels, n_rows, n_cols })
}

/// Residual shading with bins on |r| and sign-coded hue.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadingScheme {
    pub edges: [f64; 2],
    pub neutral: String,
    /// Indexed by bin: [|r| in [e0, e1), |r| >= e1].
    pub positive: [String; 2],
    pub negative: [String; 2],
    /// Fill when no residuals are given.
    pub unshaded: String,
}

impl Default for ShadingScheme {
    fn default() -> Self {
        ShadingScheme {
            edges: [2.0, 4.0],
            neutral: "#f0f0f0".into(),
            positive: ["#92c5de".into(), "#2166ac".into()],
            negative: ["#f4a582".into(), "#b2182b".into()],
            unshaded: "#d0d0d0".into(),
        }
    }
}

impl ShadingScheme {
    /// Signed bin: 0 for neutral, ±1 for the first bin, ±2 for the second.
    pub fn bin(&self, r: f64) -> i8 {
        let a = r.abs();
        let level = if a >= self.edges[1] {
            2
        } else if a >= self.edges[0] {
            1
        } else {
            0
        };
        if r < 0.0 {
            -level
        } else {
            level
        }
    }

    pub fn fill(&self, r: f64) -> &str {
        match self.bin(r) {
            0 => &self.neutral,
            b if b > 0 => &self.positive[b as usize - 1],
            b => &self.negative[(-b) as usize - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Legend {
    pub title: String,
    pub x_title: String,
    pub y_title: String,
    /// Draw the residual colour key (only meaningful with residuals).
    pub show_key: bool,
}

/// Fixed six-decimal formatting with negative zero folded to zero.
pub fn fmt_f(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Render the layout. `residuals`, when given, is indexed like the source
/// table: `residuals[row][col]`.
pub fn render_svg(
    layout: &MosaicLayout,
    residuals: Option<&[Vec<f64>]>,
    scheme: &ShadingScheme,
    legend: &Legend,
) -> Result<String, MosaicError> {
    if let Some(r) = residuals {
        let cols = r.first().map_or(0, Vec::len);
        if r.len() != layout.n_rows || r.iter().any(|row| row.len() != layout.n_cols) {
            return Err(MosaicError::DimensionMismatch {
                expected_rows: layout.n_rows,
                expected_cols: layout.n_cols,
                rows: r.len(),
                cols,
            });
        }
    }
    let px = |x: f64| fmt_f(PLOT_X + x * PLOT_W);
    let py = |y: f64| fmt_f(PLOT_Y + y * PLOT_H);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\">",
        VIEW_W, VIEW_H, VIEW_W, VIEW_H
    );
    let _ = writeln!(s, "<title>{}</title>", esc(&legend.title));
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{VIEW_W}\" height=\"{VIEW_H}\" fill=\"#ffffff\"/>");
    if !legend.title.is_empty() {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"35\" font-size=\"20\" text-anchor=\"middle\">{}</text>",
            fmt_f(PLOT_X + PLOT_W / 2.0),
            esc(&legend.title)
        );
    }

    s.push_str("<g class=\"tiles\" stroke=\"#333333\" stroke-width=\"0.5\">\n");
    for t in &layout.tiles {
        let fill = match residuals {
            Some(r) => scheme.fill(r[t.cell.0][t.cell.1]),
            None => &scheme.unshaded,
        };
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{} / {}</title></rect>",
            px(t.x),
            py(t.y),
            fmt_f(t.w * PLOT_W),
            fmt_f(t.h * PLOT_H),
            fill,
            esc(&t.row_name),
            esc(&t.col_name)
        );
        if t.h == 0.0 {
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                px(t.x),
                py(t.y),
                px(t.x + t.w),
                py(t.y)
            );
        }
    }
    s.push_str("</g>\n");

    // strip labels under the plot, one per vertical strip
    let stack = layout.y_labels.len();
    s.push_str("<g class=\"x-labels\" font-size=\"12\">\n");
    for (si, name) in layout.x_labels.iter().enumerate() {
        let t = &layout.tiles[si * stack];
        let cx = PLOT_X + (t.x + t.w / 2.0) * PLOT_W;
        let ly = PLOT_Y + PLOT_H + 16.0;
        if t.w < ROTATE_BELOW {
            let _ = writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"start\" transform=\"rotate(45 {} {})\">{}</text>",
                fmt_f(cx),
                fmt_f(ly),
                fmt_f(cx),
                fmt_f(ly),
                esc(name)
            );
        } else {
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", fmt_f(cx), fmt_f(ly), esc(name));
        }
    }
    s.push_str("</g>\n");

    // stacked labels on the left, aligned with the first strip
    s.push_str("<g class=\"y-labels\" font-size=\"12\" text-anchor=\"end\">\n");
    for (k, name) in layout.y_labels.iter().enumerate() {
        let t = &layout.tiles[k];
        let cy = PLOT_Y + (t.y + t.h / 2.0) * PLOT_H + 4.0;
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", fmt_f(PLOT_X - 8.0), fmt_f(cy), esc(name));
    }
    s.push_str("</g>\n");

    if !legend.x_title.is_empty() {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
            fmt_f(PLOT_X + PLOT_W / 2.0),
            fmt_f(VIEW_H - 30.0),
            esc(&legend.x_title)
        );
    }
    if !legend.y_title.is_empty() {
        let (x, y) = (30.0, PLOT_Y + PLOT_H / 2.0);
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
            fmt_f(x),
            fmt_f(y),
            fmt_f(x),
            fmt_f(y),
            esc(&legend.y_title)
        );
    }

    if legend.show_key && residuals.is_some() {
        let [e0, e1] = scheme.edges;
        let entries = [
            (scheme.positive[1].as_str(), format!("r \u{2265} {e1}")),
            (scheme.positive[0].as_str(), format!("{e0} \u{2264} r < {e1}")),
            (scheme.neutral.as_str(), format!("|r| < {e0}")),
            (scheme.negative[0].as_str(), format!("-{e1} < r \u{2264} -{e0}")),
            (scheme.negative[1].as_str(), format!("r \u{2264} -{e1}")),
        ];
        let lx = PLOT_X + PLOT_W + 40.0;
        s.push_str("<g class=\"legend\" font-size=\"12\">\n");
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">Pearson residual</text>", fmt_f(lx), fmt_f(PLOT_Y + 10.0));
        for (i, (color, label)) in entries.iter().enumerate() {
            let y = PLOT_Y + 25.0 + i as f64 * 26.0;
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"18\" height=\"18\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.5\"/>",
                fmt_f(lx),
                fmt_f(y),
                color
            );
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", fmt_f(lx + 26.0), fmt_f(y + 14.0), esc(label));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(counts: Vec<Vec<u64>>) -> MosaicTable {
        let rows = (0..counts.len()).map(|i| format!("r{i}")).collect();
        let cols = (0..counts[0].len()).map(|j| format!("c{j}")).collect();
        MosaicTable::new(rows, cols, counts).unwrap()
    }

    fn gap_free(t: &MosaicTable) -> MosaicLayout {
        layout_with(t, LayoutOptions { gap: 0.0, transpose: false }).unwrap()
    }

    #[test]
    fn uniform_quarters() {
        let l = gap_free(&table(vec![vec![1, 1], vec![1, 1]]));
        for t in &l.tiles {
            assert!((t.w - 0.5).abs() < 1e-12 && (t.h - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_column_heights() {
        let l = gap_free(&table(vec![vec![3], vec![1]]));
        assert_eq!(l.tiles.len(), 2);
        assert!((l.tiles[0].w - 1.0).abs() < 1e-12);
        assert!((l.tiles[0].h - 0.75).abs() < 1e-12);
        assert!((l.tiles[1].h - 0.25).abs() < 1e-12);
    }

    #[test]
    fn widths_follow_margins() {
        let l = gap_free(&table(vec![vec![10, 30], vec![20, 40]]));
        assert!((l.tiles[0].w - 0.3).abs() < 1e-9);
        assert!((l.tiles[2].w - 0.7).abs() < 1e-9);
        assert_eq!(l.tiles[0].x, l.tiles[1].x);
    }

    #[test]
    fn gaps_keep_tiles_in_square() {
        let l = layout(&table(vec![vec![5, 0, 3], vec![2, 7, 4]])).unwrap();
        for t in &l.tiles {
            assert!(t.x >= 0.0 && t.y >= 0.0 && t.x + t.w <= 1.0 + 1e-12 && t.y + t.h <= 1.0 + 1e-12);
        }
        let last = l.tiles.last().unwrap();
        assert!((last.x + last.w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transpose_swaps_axes() {
        let t = table(vec![vec![1, 3], vec![2, 2]]);
        let l = layout_with(&t, LayoutOptions { gap: 0.0, transpose: true }).unwrap();
        assert_eq!(l.x_labels, vec!["r0", "r1"]);
        assert!((l.tiles[0].w - 0.5).abs() < 1e-12);
        assert_eq!(l.tiles[1].cell, (0, 1));
        assert!((l.tiles[1].h - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_table_rejected() {
        assert_eq!(layout(&table(vec![vec![0, 0], vec![0, 0]])).unwrap_err(), MosaicError::EmptyTable);
    }

    #[test]
    fn shading_bins() {
        let s = ShadingScheme::default();
        assert_eq!(s.fill(0.0), s.neutral);
        assert_eq!(s.fill(1.99), s.neutral);
        assert_eq!(s.fill(3.1), s.positive[0]);
        assert_eq!(s.fill(-3.1), s.negative[0]);
        assert_eq!(s.fill(4.2), s.positive[1]);
        assert_eq!(s.fill(-4.2), s.negative[1]);
        assert_eq!(s.bin(2.0), 1);
        assert_eq!(s.bin(-4.0), -2);
    }

    #[test]
    fn residual_shape_checked() {
        let l = layout(&table(vec![vec![1, 2], vec![3, 4]])).unwrap();
        let bad = vec![vec![0.0; 3], vec![0.0; 3]];
        let err = render_svg(&l, Some(&bad), &ShadingScheme::default(), &Legend::default()).unwrap_err();
        assert!(matches!(err, MosaicError::DimensionMismatch { .. }));
    }

    #[test]
    fn svg_is_deterministic_and_neutral_at_zero() {
        let l = layout(&table(vec![vec![1, 2], vec![3, 4]])).unwrap();
        let zero = vec![vec![0.0; 2]; 2];
        let legend = Legend { title: "a & b".into(), show_key: true, ..Default::default() };
        let a = render_svg(&l, Some(&zero), &ShadingScheme::default(), &legend).unwrap();
        let b = render_svg(&l, Some(&zero), &ShadingScheme::default(), &legend).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("viewBox=\"0 0 1000 800\""));
        assert!(a.contains("a &amp; b"));
        assert_eq!(a.matches("<rect x=\"150.000000\"").count(), 2);
        assert_eq!(a.matches("fill=\"#f0f0f0\"><title>").count(), 4);
    }

    #[test]
    fn negative_zero_folded() {
        assert_eq!(fmt_f(-0.0), "0.000000");
        assert_eq!(fmt_f(-1e-9), "0.000000");
        assert_eq!(fmt_f(1.5), "1.500000");
    }
}
