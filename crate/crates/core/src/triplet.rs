//! Sparse triplet text format: one "degree row col" line per nonzero, with
//! '#' comments. Row indices address the (degree-1) basis, columns the
//! degree basis, both in file order.

use crate::cubical::SparseColumns;
use crate::error::Error;
use crate::filtration::{DegreeBlock, FilteredBoundaryMatrix};
use crate::persistence::ReductionResult;
use std::io::{BufRead, Write};

/// Parse a triplet matrix into a filtered boundary matrix whose filtration
/// order is the given column order (values are the column positions).
pub fn parse_matrix<R: BufRead>(reader: R) -> Result<FilteredBoundaryMatrix, Error> {
    let mut entries: Vec<(usize, u32, u32)> = Vec::new();
    let mut max_degree = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split_whitespace();
        let parse = |s: Option<&str>| -> Result<u64, Error> {
            s.and_then(|x| x.parse::<u64>().ok())
                .ok_or_else(|| Error::ConfigInvalid(format!("bad triplet on line {}", lineno + 1)))
        };
        let j = parse(it.next())? as usize;
        let row = parse(it.next())? as u32;
        let col = parse(it.next())? as u32;
        if j == 0 {
            return Err(Error::ConfigInvalid(
                "degree-0 cells have no boundary entries".into(),
            ));
        }
        max_degree = max_degree.max(j);
        entries.push((j, row, col));
    }
    let mut counts = vec![0u32; max_degree + 1];
    for &(j, row, col) in &entries {
        counts[j] = counts[j].max(col + 1);
        counts[j - 1] = counts[j - 1].max(row + 1);
    }
    let mut columns: Vec<Vec<Vec<u32>>> = counts
        .iter()
        .map(|&c| vec![Vec::new(); c as usize])
        .collect();
    for (j, row, col) in entries {
        columns[j][col as usize].push(row);
    }
    let blocks = columns
        .into_iter()
        .map(|cols| {
            let len = cols.len();
            let mut mat = SparseColumns::with_columns(len);
            for mut rows in cols {
                mat.push_column(&mut rows);
            }
            DegreeBlock {
                order: (0..len as u32).collect(),
                values: (0..len).map(|i| i as f64).collect(),
                columns: mat,
            }
        })
        .collect();
    Ok(FilteredBoundaryMatrix {
        blocks,
        index_shift: 0,
    })
}

/// Write a filtered matrix in triplet form.
pub fn write_matrix<W: Write>(w: &mut W, filtered: &FilteredBoundaryMatrix) -> Result<(), Error> {
    for (j, block) in filtered.blocks.iter().enumerate() {
        for col in 0..block.columns.len() {
            for &row in block.columns.col(col) {
                writeln!(w, "{j} {row} {col}")?;
            }
        }
    }
    Ok(())
}

/// Write the reduced matrix and its pivot pairing.
pub fn write_reduction<W: Write>(w: &mut W, red: &ReductionResult) -> Result<(), Error> {
    writeln!(w, "# reduced matrix (degree row col)")?;
    for (j, cols) in red.reduced.iter().enumerate() {
        for (c, rows) in cols.iter().enumerate() {
            for &r in rows {
                writeln!(w, "{j} {r} {c}")?;
            }
        }
    }
    writeln!(w, "# pairing (degree pivot-row col)")?;
    for (j, pairs) in red.pairing.iter().enumerate() {
        for &(r, c) in pairs {
            writeln!(w, "# pair {j} {r} {c}")?;
        }
    }
    writeln!(w, "# unpaired (degree col)")?;
    for (j, cols) in red.unpaired.iter().enumerate() {
        for &c in cols {
            writeln!(w, "# essential {j} {c}")?;
        }
    }
    Ok(())
}
