//! Dendrogram output: SVG drawing plus the JSON and Newick text forms.
//!
//! The SVG lays leaves out top to bottom with their names on the left and
//! merge heights on a horizontal distance axis. Each internal node is one
//! `path` with class `junction`; each leaf label is a `text` with class
//! `leaf`. Coordinates are printed with two decimals so output is stable.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::cluster::PrototypeDendrogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeFormat {
    Svg,
    Json,
    Newick,
}

impl FromStr for TreeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Ok(TreeFormat::Svg),
            "json" => Ok(TreeFormat::Json),
            "newick" | "nwk" => Ok(TreeFormat::Newick),
            other => Err(Error::Config(format!("unknown tree format {other:?}"))),
        }
    }
}

impl TreeFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TreeFormat::Svg => "svg",
            TreeFormat::Json => "json",
            TreeFormat::Newick => "nwk",
        }
    }
}

const ROW: f64 = 16.0;
const LABEL_WIDTH: f64 = 260.0;
const PLOT_WIDTH: f64 = 520.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Draws the tree. Prototypes of the clusters at `cut` are set in bold and
/// the cut itself is a dashed vertical line.
pub fn render_svg(tree: &PrototypeDendrogram, cut: Option<f64>) -> String {
    let n = tree.leaf_count();
    let root_h = tree.root().map_or(0.0, |r| tree.nodes[r].height);
    let axis_max = root_h.max(cut.unwrap_or(0.0)).max(1.0);
    let x = |h: f64| LABEL_WIDTH + h / axis_max * PLOT_WIDTH;
    let width = LABEL_WIDTH + PLOT_WIDTH + 30.0;
    let height = TOP + n as f64 * ROW + BOTTOM;

    // vertical position of every node: leaves by draw order, merges midway
    let mut y = vec![0.0; tree.nodes.len()];
    for (row, leaf) in tree.leaf_order().into_iter().enumerate() {
        y[leaf] = TOP + (row as f64 + 0.5) * ROW;
    }
    for i in tree.leaf_count()..tree.nodes.len() {
        if let Some([a, b]) = tree.nodes[i].children {
            y[i] = 0.5 * (y[a] + y[b]);
        }
    }
    let prototypes: Vec<usize> = cut
        .map(|h| tree.cut_at_height(h).iter().map(|c| c.prototype).collect())
        .unwrap_or_default();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (i, name) in tree.ids.iter().enumerate() {
        let weight = if prototypes.contains(&i) { r#" font-weight="bold""# } else { "" };
        let _ = writeln!(
            s,
            r#"<text class="leaf" x="{:.2}" y="{:.2}" text-anchor="end" dominant-baseline="middle"{weight}>{}</text>"#,
            LABEL_WIDTH - 6.0,
            y[i],
            escape(name)
        );
    }

    for (i, node) in tree.nodes.iter().enumerate() {
        let Some([a, b]) = node.children else { continue };
        let (xa, xb, xn) = (x(tree.nodes[a].height), x(tree.nodes[b].height), x(node.height));
        let _ = writeln!(
            s,
            r#"<path class="junction" d="M{xa:.2},{:.2} H{xn:.2} V{:.2} H{xb:.2}" fill="none" stroke="black"><title>{} at {}</title></path>"#,
            y[a],
            y[b],
            escape(&tree.ids[node.prototype]),
            node.height
        );
        let _ = i;
    }

    let axis_y = TOP + n as f64 * ROW + 10.0;
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
        x(0.0),
        x(axis_max)
    );
    let ticks = (axis_max * 10.0).round() as usize;
    for k in 0..=ticks {
        let h = k as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{axis_y:.2}" x2="{0:.2}" y2="{1:.2}" stroke="black"/><text x="{0:.2}" y="{2:.2}" text-anchor="middle">{3:.1}</text>"#,
            x(h),
            axis_y + 4.0,
            axis_y + 16.0,
            h
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">distance (1 - |correlation|)</text>"#,
        x(axis_max / 2.0),
        axis_y + 32.0
    );
    if let Some(h) = cut {
        let _ = writeln!(
            s,
            r#"<line class="cut" x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="red" stroke-dasharray="6,4"/>"#,
            x(h),
            TOP - 10.0,
            axis_y
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_tree(tree: &PrototypeDendrogram, format: TreeFormat, cut: Option<f64>) -> Result<String> {
    Ok(match format {
        TreeFormat::Svg => render_svg(tree, cut),
        TreeFormat::Json => tree.to_json()?,
        TreeFormat::Newick => tree.to_newick() + "\n",
    })
}

pub fn render_dendrogram(
    tree: &PrototypeDendrogram,
    format: TreeFormat,
    cut: Option<f64>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_tree(tree, format, cut)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{minimax_linkage_cluster, DistanceMatrix};

    fn three() -> PrototypeDendrogram {
        let rows = vec![vec![0.0, 0.3, 0.8], vec![0.3, 0.0, 0.6], vec![0.8, 0.6, 0.0]];
        let d = DistanceMatrix::from_rows(vec!["a<1".into(), "b".into(), "c".into()], &rows).unwrap();
        minimax_linkage_cluster(&d).unwrap()
    }

    #[test]
    fn svg_structure() {
        let svg = render_svg(&three(), Some(0.7));
        assert_eq!(svg.matches(r#"class="leaf""#).count(), 3);
        assert_eq!(svg.matches(r#"class="junction""#).count(), 2);
        assert!(svg.contains("a&lt;1"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn json_round_trip_renders_identically() {
        let t = three();
        let json = render_tree(&t, TreeFormat::Json, None).unwrap();
        let back = PrototypeDendrogram::from_json(&json).unwrap();
        assert_eq!(render_svg(&back, Some(0.7)), render_svg(&t, Some(0.7)));
    }

    #[test]
    fn format_names() {
        assert_eq!("SVG".parse::<TreeFormat>().unwrap(), TreeFormat::Svg);
        assert_eq!("newick".parse::<TreeFormat>().unwrap(), TreeFormat::Newick);
        assert!("png".parse::<TreeFormat>().is_err());
    }
}
