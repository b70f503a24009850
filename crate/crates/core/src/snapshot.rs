//! Plain-text field and ensemble snapshots.
//!
//! Field files start with `# grid D N1..ND L1..LD boundary` followed by one
//! row per cell, `index value` or `index re im`. Complex fields may carry an
//! extra `# seam_twist t1..tD` line. Values are written with 17 significant
//! digits so a write/read cycle is bit-exact.
//!
//! Ensemble files start with `# M D seed step` and hold one row of D
//! coordinates per walker.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;

use crate::error::{EdError, Result};
use crate::field::{ComplexField, ScalarField};
use crate::grid::{Boundary, Grid};
use crate::kernel::WalkerEnsemble;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSnapshot {
    Real(ScalarField),
    Complex {
        psi: ComplexField,
        seam_twist: Vec<f64>,
    },
}

impl FieldSnapshot {
    pub fn grid(&self) -> &Grid {
        match self {
            FieldSnapshot::Real(f) => f.grid(),
            FieldSnapshot::Complex { psi, .. } => psi.grid(),
        }
    }
}

fn header(grid: &Grid) -> String {
    format!("# grid {grid}\n")
}

pub fn scalar_to_string(f: &ScalarField) -> String {
    let mut s = header(f.grid());
    for (i, v) in f.values().iter().enumerate() {
        let _ = writeln!(s, "{i} {v:.16e}");
    }
    s
}

pub fn complex_to_string(psi: &ComplexField, seam_twist: &[f64]) -> String {
    let mut s = header(psi.grid());
    if seam_twist.iter().any(|t| *t != 0.0) {
        s.push_str("# seam_twist");
        for t in seam_twist {
            let _ = write!(s, " {t:.16e}");
        }
        s.push('\n');
    }
    for (i, z) in psi.values().iter().enumerate() {
        let _ = writeln!(s, "{i} {:.16e} {:.16e}", z.re, z.im);
    }
    s
}

pub fn write_scalar_field<W: Write>(out: &mut W, f: &ScalarField) -> Result<()> {
    out.write_all(scalar_to_string(f).as_bytes())?;
    Ok(())
}

pub fn write_complex_field<W: Write>(
    out: &mut W,
    psi: &ComplexField,
    seam_twist: &[f64],
) -> Result<()> {
    out.write_all(complex_to_string(psi, seam_twist).as_bytes())?;
    Ok(())
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| EdError::Parse(format!("line {line}: bad number '{tok}'")))
}

fn parse_grid(rest: &str) -> Result<Grid> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    let dim: usize = toks
        .first()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| EdError::Parse("grid header: missing dimension".into()))?;
    if toks.len() != 2 + 2 * dim {
        return Err(EdError::Parse(format!(
            "grid header: expected {} fields, got {}",
            2 + 2 * dim,
            toks.len()
        )));
    }
    let points = toks[1..1 + dim]
        .iter()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| EdError::Parse(format!("grid header: bad size '{t}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let lengths = toks[1 + dim..1 + 2 * dim]
        .iter()
        .map(|t| parse_f64(t, 1))
        .collect::<Result<Vec<_>>>()?;
    let boundary: Boundary = toks[1 + 2 * dim].parse()?;
    Grid::new(points, lengths, boundary)
}

pub fn read_field<R: Read>(input: R) -> Result<FieldSnapshot> {
    let mut lines = BufReader::new(input).lines();
    let first = lines
        .next()
        .ok_or_else(|| EdError::Parse("empty field file".into()))??;
    let rest = first
        .trim()
        .strip_prefix("# grid")
        .ok_or_else(|| EdError::Parse("field file must start with '# grid'".into()))?;
    let grid = parse_grid(rest)?;
    let mut twist = vec![0.0; grid.dim()];
    let mut real = Vec::with_capacity(grid.len());
    let mut cplx = Vec::with_capacity(grid.len());
    let mut columns = None;
    for (n, line) in lines.enumerate() {
        let line = line?;
        let lineno = n + 2;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(tw) = t.strip_prefix("# seam_twist") {
            twist = tw
                .split_whitespace()
                .map(|x| parse_f64(x, lineno))
                .collect::<Result<_>>()?;
            if twist.len() != grid.dim() {
                return Err(EdError::Parse(format!(
                    "line {lineno}: seam twist needs {} values",
                    grid.dim()
                )));
            }
            continue;
        }
        if t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let cols = *columns.get_or_insert(toks.len());
        if toks.len() != cols || !(cols == 2 || cols == 3) {
            return Err(EdError::Parse(format!(
                "line {lineno}: expected 2 or 3 columns consistently"
            )));
        }
        let idx: usize = toks[0]
            .parse()
            .map_err(|_| EdError::Parse(format!("line {lineno}: bad index '{}'", toks[0])))?;
        let expected = if cols == 2 { real.len() } else { cplx.len() };
        if idx != expected {
            return Err(EdError::Parse(format!(
                "line {lineno}: index {idx}, expected {expected}"
            )));
        }
        if cols == 2 {
            real.push(parse_f64(toks[1], lineno)?);
        } else {
            cplx.push(Complex64::new(
                parse_f64(toks[1], lineno)?,
                parse_f64(toks[2], lineno)?,
            ));
        }
    }
    match columns {
        Some(2) => Ok(FieldSnapshot::Real(ScalarField::from_values(&grid, real)?)),
        Some(3) => Ok(FieldSnapshot::Complex {
            psi: ComplexField::from_values(&grid, cplx)?,
            seam_twist: twist,
        }),
        _ => Err(EdError::Parse("field file has no data rows".into())),
    }
}

pub fn ensemble_to_string(w: &WalkerEnsemble) -> String {
    let mut s = format!("# {} {} {} {}\n", w.len(), w.dim(), w.seed, w.step_count);
    for i in 0..w.len() {
        let row: Vec<String> = w.walker(i).iter().map(|x| format!("{x:.16e}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_ensemble<W: Write>(out: &mut W, w: &WalkerEnsemble) -> Result<()> {
    out.write_all(ensemble_to_string(w).as_bytes())?;
    Ok(())
}

pub fn read_ensemble<R: Read>(input: R) -> Result<WalkerEnsemble> {
    let mut lines = BufReader::new(input).lines();
    let first = lines
        .next()
        .ok_or_else(|| EdError::Parse("empty ensemble file".into()))??;
    let toks: Vec<&str> = first
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| EdError::Parse("ensemble file must start with '# M D seed step'".into()))?
        .split_whitespace()
        .collect();
    if toks.len() != 4 {
        return Err(EdError::Parse("ensemble header needs M D seed step".into()));
    }
    let num = |t: &str| {
        t.parse::<u64>()
            .map_err(|_| EdError::Parse(format!("ensemble header: bad value '{t}'")))
    };
    let (m, dim, seed, step) = (
        num(toks[0])? as usize,
        num(toks[1])? as usize,
        num(toks[2])?,
        num(toks[3])?,
    );
    if m == 0 {
        return Err(EdError::EmptyEnsemble);
    }
    let mut positions = Vec::with_capacity(m * dim);
    for (n, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split_whitespace()
            .map(|x| parse_f64(x, n + 2))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != dim {
            return Err(EdError::Parse(format!(
                "line {}: expected {dim} coordinates",
                n + 2
            )));
        }
        positions.extend(row);
    }
    if positions.len() != m * dim {
        return Err(EdError::Parse(format!(
            "expected {m} walkers, found {}",
            positions.len() / dim.max(1)
        )));
    }
    WalkerEnsemble::from_parts(dim, positions, seed, step)
}
