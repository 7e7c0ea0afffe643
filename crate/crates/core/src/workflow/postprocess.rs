//! Reformatting of retrieved tables: display names, semantic column
//! filtering and cell formatting.

use crate::dataplane::{format_cell, Cell, Column, ColumnType, DataTable, Registry};
use crate::embedding::{tokenize, Embedder};
use crate::error::Result;

pub const DEFAULT_FILTER_THRESHOLD: f64 = 0.35;

/// Key columns that are always kept: dates, ids and period labels.
pub fn is_protected(col: &Column) -> bool {
    col.ty == ColumnType::Date
        || col.name.ends_with("_id")
        || matches!(col.name.as_str(), "month" | "date" | "period" | "metric")
}

/// Similarity of a column to the query: the best cosine between the
/// column descriptor and either the whole query or any single query word.
pub fn column_relevance(column: &str, query: &str, embedder: &dyn Embedder, registry: &Registry) -> Result<f64> {
    let descriptor = embedder.embed(&registry.descriptor(column))?;
    let mut best = embedder.embed(query)?.cosine(&descriptor);
    for token in tokenize(query) {
        best = best.max(embedder.embed(&token)?.cosine(&descriptor));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostProcessed {
    /// All-text table with display-name headers.
    pub table: DataTable,
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
}

/// Renames, filters and formats `table` for presentation. Rows keep their
/// order. If every unprotected column would be dropped, all are kept.
pub fn post_process(
    table: &DataTable,
    query: &str,
    embedder: &dyn Embedder,
    registry: &Registry,
    threshold: f64,
) -> PostProcessed {
    let mut keep: Vec<bool> = Vec::with_capacity(table.columns().len());
    for col in table.columns() {
        if is_protected(col) {
            keep.push(true);
            continue;
        }
        let relevant = match column_relevance(&col.name, query, embedder, registry) {
            Ok(sim) => sim >= threshold,
            Err(e) => {
                tracing::warn!(column = %col.name, error = %e, "column relevance unavailable, keeping column");
                true
            }
        };
        keep.push(relevant);
    }
    let any_value_kept = table.columns().iter().zip(&keep).any(|(c, k)| *k && !is_protected(c));
    if !any_value_kept {
        keep.iter_mut().for_each(|k| *k = true);
    }

    let mut columns = Vec::new();
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for (col, k) in table.columns().iter().zip(&keep) {
        if *k {
            columns.push(Column::new(registry.display_name(&col.name), ColumnType::Text));
            kept.push(col.name.clone());
        } else {
            dropped.push(col.name.clone());
        }
    }
    let rows = table
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(table.columns())
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|((cell, col), _)| Cell::Text(format_cell(cell, &col.name)))
                .collect()
        })
        .collect();
    // Display names are unique because source names are.
    let table = DataTable::new(columns, rows).unwrap_or_else(|_| table.clone());
    PostProcessed { table, kept, dropped }
}

/// Pipe-separated rendering for prompts.
pub fn table_text(table: &DataTable) -> String {
    let mut out = String::new();
    let header: Vec<&str> = table.columns().iter().map(|c| c.name.as_str()).collect();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    if table.is_empty() {
        out.push_str("(no rows)\n");
    }
    for row in table.rows() {
        let cells: Vec<String> = row
            .iter()
            .zip(table.columns())
            .map(|(c, col)| format_cell(c, &col.name))
            .collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out
}
