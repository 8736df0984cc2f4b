//! Label stacks: annotations read along the VAT order, drawn as a stacked bar.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use audiovat::Permutation;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::labels::{City, Scene};

/// Tableau 10, indexed by scene vocabulary order.
pub const SCENE_PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

/// Okabe-Ito, indexed by city vocabulary order.
pub const CITY_PALETTE: [&str; 6] = [
    "#e69f00", "#56b4e9", "#009e73", "#f0e442", "#0072b2", "#d55e00",
];

/// Label → colour assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    entries: Vec<(String, &'static str)>,
}

impl Palette {
    pub fn scenes() -> Self {
        Self {
            entries: Scene::ALL
                .iter()
                .map(|s| (s.to_string(), SCENE_PALETTE[s.index()]))
                .collect(),
        }
    }

    pub fn cities() -> Self {
        Self {
            entries: City::ALL
                .iter()
                .map(|c| (c.to_string(), CITY_PALETTE[c.index()]))
                .collect(),
        }
    }

    /// Sorted distinct labels take the 10-colour palette in turn, cycling.
    pub fn generic<S: AsRef<str>>(labels: &[S]) -> Self {
        let distinct: BTreeSet<&str> = labels.iter().map(AsRef::as_ref).collect();
        Self {
            entries: distinct
                .into_iter()
                .enumerate()
                .map(|(i, l)| (l.to_string(), SCENE_PALETTE[i % SCENE_PALETTE.len()]))
                .collect(),
        }
    }

    pub fn colour(&self, label: &str) -> Option<&'static str> {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| *c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Run {
    pub label: String,
    pub start: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelStack {
    /// Original record index at each position.
    pub order: Vec<usize>,
    /// Labels in VAT order.
    pub labels: Vec<String>,
    pub runs: Vec<Run>,
    /// `(label, #rrggbb)` for each distinct label, in first-appearance order.
    pub colours: Vec<(String, String)>,
}

impl LabelStack {
    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    pub fn mean_run_length(&self) -> f64 {
        if self.runs.is_empty() {
            0.0
        } else {
            self.labels.len() as f64 / self.runs.len() as f64
        }
    }

    pub fn distinct_labels(&self) -> usize {
        self.colours.len()
    }

    /// `position,record,label,run`
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["position", "record", "label", "run"])
            .expect("in-memory write");
        let mut pos = 0;
        for (r, run) in self.runs.iter().enumerate() {
            for _ in 0..run.length {
                w.write_record([
                    pos.to_string(),
                    self.order[pos].to_string(),
                    run.label.clone(),
                    r.to_string(),
                ])
                .expect("in-memory write");
                pos += 1;
            }
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Vertical stacked bar, top = first VAT position, with a legend.
    pub fn to_svg(&self, title: &str) -> String {
        const BAR_H: f64 = 600.0;
        const TOP: f64 = 40.0;
        const ROW: f64 = 18.0;
        let n = self.labels.len().max(1) as f64;
        let legend_h = TOP + ROW * self.colours.len() as f64;
        let height = (TOP + BAR_H + 20.0).max(legend_h + 20.0);
        let colour = |label: &str| {
            self.colours
                .iter()
                .find(|(l, _)| l == label)
                .map(|(_, c)| c.as_str())
                .unwrap_or("#000000")
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="320" height="{height:.0}" viewBox="0 0 320 {height:.0}">"#
        );
        let _ = writeln!(
            s,
            r#"<text x="10" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
            escape(title)
        );
        for run in &self.runs {
            let y = TOP + BAR_H * run.start as f64 / n;
            let h = BAR_H * run.length as f64 / n;
            let _ = writeln!(
                s,
                r#"<rect x="10" y="{y:.3}" width="60" height="{h:.3}" fill="{}"><title>{} ({})</title></rect>"#,
                colour(&run.label),
                escape(&run.label),
                run.length
            );
        }
        for (i, (label, c)) in self.colours.iter().enumerate() {
            let y = TOP + ROW * i as f64;
            let _ = writeln!(
                s,
                r#"<rect x="90" y="{y:.0}" width="12" height="12" fill="{c}"/><text x="108" y="{:.0}" font-family="sans-serif" font-size="12">{}</text>"#,
                y + 11.0,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Permutes `labels` by `order` and run-length encodes the result.
pub fn label_stack<S: AsRef<str>>(
    order: &Permutation,
    labels: &[S],
    palette: &Palette,
) -> Result<LabelStack> {
    if order.len() != labels.len() {
        return Err(CliError::input(format!(
            "ordering has {} entries but there are {} labels",
            order.len(),
            labels.len()
        )));
    }
    let ordered: Vec<String> = order
        .as_slice()
        .iter()
        .map(|&i| labels[i].as_ref().to_string())
        .collect();
    let mut runs: Vec<Run> = Vec::new();
    for (pos, label) in ordered.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if &run.label == label => run.length += 1,
            _ => runs.push(Run {
                label: label.clone(),
                start: pos,
                length: 1,
            }),
        }
    }
    let mut colours: Vec<(String, String)> = Vec::new();
    for label in &ordered {
        if colours.iter().all(|(l, _)| l != label) {
            let c = palette
                .colour(label)
                .ok_or_else(|| CliError::input(format!("no palette colour for label {label:?}")))?;
            colours.push((label.clone(), c.to_string()));
        }
    }
    Ok(LabelStack {
        order: order.as_slice().to_vec(),
        labels: ordered,
        runs,
        colours,
    })
}
