use std::fmt::Write;

use crate::error::Result;
use crate::ingest::Source;

use super::config::DisplayNames;
use super::manifest::{Manifest, MANIFEST};
use super::stages::typology_counts;
use super::store::Store;

fn table(out: &mut String, title: &str, header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{}", line(header));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
    let _ = writeln!(out);
}

fn short(s: &str) -> String {
    match s.parse::<f64>() {
        Ok(v) if v.fract() != 0.0 || v.abs() >= 1e6 => {
            if v.abs() >= 1e-3 || v == 0.0 {
                format!("{v:.4}")
            } else {
                format!("{v:.3e}")
            }
        }
        _ => s.to_string(),
    }
}

fn renamed(header: &[String], names: &DisplayNames) -> Vec<String> {
    header
        .iter()
        .map(|h| {
            for s in Source::ALL {
                if let Some(rest) = h.strip_prefix(s.as_str()) {
                    if rest.is_empty() || rest.starts_with('_') {
                        return format!("{}{rest}", names.of(s));
                    }
                }
            }
            h.clone()
        })
        .collect()
}

/// Plain-text summary of every table present in the store.
pub fn report(store: &Store, names: &DisplayNames) -> Result<String> {
    let mut out = String::new();
    if store.has(MANIFEST) {
        let m = Manifest::load(store)?;
        let _ = writeln!(out, "{} {}  status: {:?}  seed: {}", m.tool, m.version, m.status, m.seed);
        if let Some(stage) = &m.failed_stage {
            let _ = writeln!(out, "failed stage: {stage}: {}", m.error.as_deref().unwrap_or(""));
        }
        let _ = writeln!(out);
        let rows: Vec<Vec<String>> = m
            .stages
            .iter()
            .map(|r| {
                let counts = r.counts.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
                vec![r.stage.clone(), r.source.clone().unwrap_or_default(), counts]
            })
            .collect();
        table(&mut out, "Stages", &["stage", "source", "counts"].map(String::from), &rows);
    }
    let files = [
        ("stats.table1.csv", "Tourist density by zone"),
        ("ols.table2.csv", "Pairwise regressions"),
        ("kmeans.table3.csv", "K-means groups"),
        ("moran.table4.csv", "Global Moran's I"),
        ("typology.gradient.csv", "Typology by distance ring"),
    ];
    for (name, title) in files {
        if !store.has(name) {
            continue;
        }
        let (header, rows) = store.read_table_csv(name)?;
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| names_in_cell(c, names))
                    .map(|c| short(&c))
                    .collect()
            })
            .collect();
        table(&mut out, title, &renamed(&header, names), &rows);
    }
    if store.has("typology.classes.csv") {
        let counts = typology_counts(&store.read_typology()?);
        let rows: Vec<Vec<String>> = counts.iter().map(|(k, v)| vec![k.clone(), v.to_string()]).collect();
        table(&mut out, "Typology classes", &["class", "zones"].map(String::from), &rows);
    }
    Ok(out)
}

fn names_in_cell(c: &str, names: &DisplayNames) -> String {
    c.parse::<Source>().map_or_else(|_| c.to_string(), |s| names.of(s).to_string())
}
